/** Explorer entry point: pure view over the placement service. The page
 * never computes utility or selection itself; it renders service payloads
 * and keeps the whole view reconstructible from the URL fragment. */

import { ApiClient, ApiError } from "./api.js";
import type { SelectRequest } from "./api.js";
import { legendTicks, scaleGradient } from "./color.js";
import { buildScene, drawScene, hitTest } from "./render.js";
import type { DrawPoint } from "./render.js";
import { SelectScheduler } from "./scheduler.js";
import { parseState, serializeState, toggleExcluded } from "./state.js";
import type { KnownWorld, ViewState } from "./state.js";
import type { PatchInfo, SelectionResult, UtilityColumn } from "./types.js";

const el = <T extends HTMLElement>(id: string): T => {
    const node = document.getElementById(id);
    if (!node) throw new Error(`missing #${id}`);
    return node as T;
};

class App {
    private readonly client = new ApiClient("");
    private readonly scheduler = new SelectScheduler((req, signal) =>
        this.client.select(req, signal));

    private known: KnownWorld = { activities: [], patchIds: [] };
    private patches: PatchInfo[] = [];
    private state!: ViewState;
    private scores = new Map<number, number>();
    private selection: SelectionResult | null = null;
    private scene: DrawPoint[] = [];
    private lastRequest: SelectRequest | null = null;
    private utilityCache = new Map<string, UtilityColumn>();

    private canvas!: HTMLCanvasElement;
    private ctx!: CanvasRenderingContext2D;
    private dragging = false;
    private dragMoved = false;
    private dragX = 0;
    private dragY = 0;

    async boot(): Promise<void> {
        this.canvas = el<HTMLCanvasElement>("cloud");
        this.ctx = this.canvas.getContext("2d")!;
        el("legend-bar").style.background = scaleGradient();

        try {
            const health = await this.client.health();
            el("status").textContent = `service ${health.version} ok`;
        } catch (err) {
            this.showEmpty(`service unreachable: ${describe(err)}`);
            return;
        }

        const [patchDoc, activities] = await Promise.all([
            this.client.patches(),
            this.client.activities(),
        ]);
        this.patches = patchDoc.patches;
        this.known = {
            activities,
            patchIds: this.patches.map((p) => p.id),
        };
        if (!this.patches.length || !activities.length) {
            this.showEmpty("workspace has no patches or no activities");
            return;
        }

        this.state = parseState(location.hash, this.known);
        this.buildControls();
        this.bindCanvas();
        window.addEventListener("resize", () => this.render());
        window.addEventListener("hashchange", () => this.restoreFromHash());

        this.scheduler.onResult = (result) => this.onSelection(result);
        this.scheduler.onError = (err) => this.onSelectError(err);

        await this.refreshScores();
        this.requestSelect();
        this.scheduler.flush(); // first paint should not wait for the debounce
        this.render();
    }

    // ------------------------------------------------------------ controls

    private buildControls(): void {
        const boxes = el("activity-boxes");
        boxes.innerHTML = "";
        for (const name of this.known.activities) {
            const label = document.createElement("label");
            const box = document.createElement("input");
            box.type = "checkbox";
            box.value = name;
            box.checked = this.state.activities.includes(name);
            box.addEventListener("change", () => this.onSubsetChange());
            label.appendChild(box);
            label.appendChild(document.createTextNode(name));
            boxes.appendChild(label);
        }

        const activity = el<HTMLSelectElement>("activity");
        activity.innerHTML = "";
        for (const name of this.known.activities) {
            const opt = document.createElement("option");
            opt.value = name;
            opt.textContent = name;
            activity.appendChild(opt);
        }
        activity.value = this.state.activity;
        activity.addEventListener("change", () => {
            this.state.activity = activity.value;
            this.syncHash();
            void this.refreshScores().then(() => this.render());
        });

        const mode = el<HTMLSelectElement>("mode");
        mode.value = this.state.mode;
        mode.addEventListener("change", () => {
            this.state.mode = mode.value === "mean" ? "mean" : "activity";
            activity.disabled = this.state.mode === "mean";
            this.syncHash();
            void this.refreshScores().then(() => this.render());
        });
        activity.disabled = this.state.mode === "mean";

        const tau = el<HTMLInputElement>("tau");
        tau.value = String(this.state.tau);
        el("tau-value").textContent = this.state.tau.toFixed(3);
        tau.addEventListener("input", () => {
            this.state.tau = Number(tau.value);
            el("tau-value").textContent = this.state.tau.toFixed(3);
            this.syncHash();
            this.requestSelect();
        });

        el("clear-excluded").addEventListener("click", () => {
            if (!this.state.excluded.length) return;
            this.state.excluded = [];
            this.syncHash();
            this.updateExcludedSummary();
            this.requestSelect();
            this.render();
        });

        el("retry").addEventListener("click", () => {
            if (this.lastRequest) {
                this.setBanner("retrying…", "");
                this.scheduler.request(this.lastRequest);
                this.scheduler.flush();
            }
        });

        el("job-run").addEventListener("click", () => void this.runJob());
        this.updateExcludedSummary();
    }

    private onSubsetChange(): void {
        const boxes = el("activity-boxes").querySelectorAll("input");
        const picked: string[] = [];
        boxes.forEach((b) => {
            if (b.checked) picked.push(b.value);
        });
        if (!picked.length) {
            // keep at least one activity; re-check the one just cleared
            boxes.forEach((b) => {
                if (b.value === this.state.activities[0]) b.checked = true;
            });
            return;
        }
        this.state.activities = picked;
        this.syncHash();
        this.renderBest();
    }

    // ------------------------------------------------------------ actions

    private requestSelect(): void {
        this.lastRequest = {
            tau: this.state.tau,
            excluded: this.state.excluded,
        };
        this.setBanner("selecting…", "");
        this.scheduler.request(this.lastRequest);
    }

    private onSelection(result: SelectionResult): void {
        this.selection = result;
        if (result.feasible) {
            this.setBanner(
                `${result.selected.length} sensor${result.selected.length === 1 ? "" : "s"}, ` +
                    `coverage ${result.coverage.toFixed(4)}`,
                "ok");
        } else {
            this.setBanner(
                `infeasible: best coverage ${result.coverage.toFixed(4)} ` +
                    `with ${result.selected.length} sensors`,
                "bad");
        }
        this.renderBest();
        this.render();
    }

    private onSelectError(err: unknown): void {
        // constraint errors read as infeasibility; anything else offers retry
        if (err instanceof ApiError && err.status === 400) {
            this.setBanner(`cannot select: ${err.message}`, "bad");
        } else {
            this.setBanner(`connection lost: ${describe(err)}`, "bad", true);
        }
    }

    private async refreshScores(): Promise<void> {
        // prefixed keys keep the mean column from colliding with an
        // activity that happens to be named "mean"
        const key = this.state.mode === "mean"
            ? "mean:"
            : `act:${this.state.activity}`;
        let column = this.utilityCache.get(key);
        if (!column) {
            try {
                column = this.state.mode === "mean"
                    ? await this.client.utilityMean()
                    : await this.client.utility(this.state.activity);
                this.utilityCache.set(key, column);
            } catch (err) {
                this.scores = new Map();
                this.showEmpty(`no utility data: ${describe(err)}`);
                return;
            }
        }
        this.hideEmpty();
        this.scores = new Map(
            column.locations.map((loc, i) => [loc, column!.scores[i]]));
        this.renderLegend();
    }

    private async runJob(): Promise<void> {
        const status = el("job-status");
        try {
            const job = await this.client.startJob(this.state.activities);
            status.textContent = `job ${job.id}: ${job.stage}`;
            const poll = async (): Promise<void> => {
                const rec = await this.client.job(job.id);
                if (rec.stage === "failed") {
                    status.textContent = `job failed: ${rec.error}`;
                    return;
                }
                if (rec.stage === "done") {
                    status.textContent =
                        `re-evaluated [${rec.activities.join(", ")}]: ` +
                        `results in workspace jobs/${rec.id}/`;
                    return;
                }
                status.textContent =
                    `job ${rec.stage} ${(rec.progress * 100).toFixed(0)}%`;
                setTimeout(() => void poll(), 400);
            };
            await poll();
        } catch (err) {
            status.textContent = `job error: ${describe(err)}`;
        }
    }

    // ---------------------------------------------------------- rendering

    private render(): void {
        const box = this.canvas.parentElement!;
        const width = box.clientWidth;
        const height = box.clientHeight;
        const dpr = window.devicePixelRatio || 1;
        this.canvas.width = width * dpr;
        this.canvas.height = height * dpr;
        this.ctx.setTransform(dpr, 0, 0, dpr, 0, 0);

        const vp = { width, height, margin: 30 };
        this.scene = buildScene(
            this.patches,
            this.scores,
            new Set(this.selection?.selected ?? []),
            new Set(this.state.excluded),
            { yaw: this.state.yaw, pitch: this.state.pitch },
            vp);
        drawScene(this.ctx, vp, this.scene);
    }

    private renderLegend(): void {
        const ticksBox = el("legend-ticks");
        const ticks = legendTicks([...this.scores.values()]);
        ticksBox.innerHTML = "";
        for (const t of ticks) {
            const span = document.createElement("span");
            span.style.left = `${100 * t}%`;
            span.textContent = t.toFixed(3);
            ticksBox.appendChild(span);
        }
    }

    private renderBest(): void {
        const list = el("best-list");
        list.innerHTML = "";
        if (!this.selection) return;
        for (const [activity, best] of Object.entries(
            this.selection.per_activity_best)) {
            if (!this.state.activities.includes(activity)) continue;
            const li = document.createElement("li");
            li.textContent =
                `${activity}: patch ${best.location} (F1 ${best.f1.toFixed(3)})`;
            list.appendChild(li);
        }
    }

    private updateExcludedSummary(): void {
        const n = this.state.excluded.length;
        el("excluded-summary").textContent = n
            ? `${n} excluded: ${this.state.excluded.join(", ")}`
            : "none excluded (click a patch to exclude it)";
    }

    private setBanner(text: string, kind: "" | "ok" | "bad", retry = false): void {
        el("banner-text").textContent = text;
        el("banner").className = kind;
        el("retry").style.display = retry ? "inline-block" : "none";
    }

    private showEmpty(message: string): void {
        const overlay = el("empty");
        overlay.textContent = message;
        overlay.style.display = "flex";
    }

    private hideEmpty(): void {
        el("empty").style.display = "none";
    }

    // -------------------------------------------------------- interaction

    private bindCanvas(): void {
        const tip = el("tip");
        this.canvas.addEventListener("mousedown", (ev) => {
            this.dragging = true;
            this.dragMoved = false;
            this.dragX = ev.clientX;
            this.dragY = ev.clientY;
        });
        window.addEventListener("mouseup", () => {
            this.dragging = false;
        });
        this.canvas.addEventListener("mousemove", (ev) => {
            if (this.dragging) {
                const dx = ev.clientX - this.dragX;
                const dy = ev.clientY - this.dragY;
                if (Math.abs(dx) + Math.abs(dy) > 2) this.dragMoved = true;
                this.dragX = ev.clientX;
                this.dragY = ev.clientY;
                this.state.yaw += dx * 0.01;
                this.state.pitch = Math.max(
                    -Math.PI / 2,
                    Math.min(Math.PI / 2, this.state.pitch + dy * 0.01));
                this.syncHash();
                this.render();
                tip.style.display = "none";
                return;
            }
            const hit = hitTest(this.scene, ev.offsetX, ev.offsetY);
            if (hit) {
                tip.style.display = "block";
                tip.style.left = `${ev.offsetX + 14}px`;
                tip.style.top = `${ev.offsetY + 14}px`;
                const score = hit.score === null ? "n/a" : hit.score.toFixed(3);
                tip.textContent =
                    `patch ${hit.id}` +
                    (hit.label ? ` [${hit.label}]` : "") +
                    ` score ${score}` +
                    (hit.excluded ? " (excluded)" : "") +
                    (hit.selected ? " (selected)" : "");
            } else {
                tip.style.display = "none";
            }
        });
        this.canvas.addEventListener("mouseleave", () => {
            tip.style.display = "none";
        });
        this.canvas.addEventListener("click", (ev) => {
            if (this.dragMoved) return; // that was a rotate, not a pick
            const hit = hitTest(this.scene, ev.offsetX, ev.offsetY);
            if (!hit) return;
            this.state.excluded = toggleExcluded(this.state.excluded, hit.id);
            this.syncHash();
            this.updateExcludedSummary();
            this.requestSelect();
            this.render();
        });
    }

    // ----------------------------------------------------------- URL sync

    private syncHash(): void {
        history.replaceState(null, "", `#${serializeState(this.state)}`);
    }

    private restoreFromHash(): void {
        const restored = parseState(location.hash, this.known);
        const scoreSourceChanged =
            restored.mode !== this.state.mode ||
            restored.activity !== this.state.activity;
        this.state = restored;
        el<HTMLInputElement>("tau").value = String(restored.tau);
        el("tau-value").textContent = restored.tau.toFixed(3);
        el<HTMLSelectElement>("mode").value = restored.mode;
        el<HTMLSelectElement>("activity").value = restored.activity;
        el<HTMLSelectElement>("activity").disabled = restored.mode === "mean";
        el("activity-boxes").querySelectorAll("input").forEach((b) => {
            b.checked = restored.activities.includes(b.value);
        });
        this.updateExcludedSummary();
        const repaint = () => {
            this.requestSelect();
            this.scheduler.flush();
            this.render();
        };
        if (scoreSourceChanged) void this.refreshScores().then(repaint);
        else repaint();
    }
}

function describe(err: unknown): string {
    if (err instanceof Error) return err.message;
    return String(err);
}

const app = new App();
void app.boot();
