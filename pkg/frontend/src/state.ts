/** ViewState <-> URL fragment. The fragment is the single source of truth
 * for everything a shared link must reproduce: tau, color mode, activity
 * subset, exclusions, and camera. Parsing is total: any malformed or
 * unknown value falls back to a default, and exclusions/activities are
 * filtered against what the workspace actually contains. */

export type ColorMode = "activity" | "mean";

export interface ViewState {
    activities: string[]; // visible activity subset (never empty)
    activity: string; // color source when mode = "activity"
    mode: ColorMode;
    tau: number; // [0, 1]
    excluded: number[]; // sorted unique patch ids
    yaw: number; // camera, radians
    pitch: number;
}

/** What the workspace knows; used to validate restored state. */
export interface KnownWorld {
    activities: string[];
    patchIds: number[];
}

export const DEFAULT_TAU = 0.9;
const DEFAULT_YAW = 0.6;
const DEFAULT_PITCH = -0.15;
const PITCH_LIMIT = Math.PI / 2;

export function defaultState(known: KnownWorld): ViewState {
    return {
        activities: [...known.activities],
        activity: known.activities[0] ?? "",
        mode: "activity",
        tau: DEFAULT_TAU,
        excluded: [],
        yaw: DEFAULT_YAW,
        pitch: DEFAULT_PITCH,
    };
}

const clamp = (v: number, lo: number, hi: number) => Math.min(hi, Math.max(lo, v));

/** Fragment payload, without the leading "#". String(number) keeps full
 * float precision so a restored tau selects the identical subset. */
export function serializeState(s: ViewState): string {
    return [
        `tau=${s.tau}`,
        `mode=${s.mode}`,
        `act=${encodeURIComponent(s.activity)}`,
        `acts=${s.activities.map(encodeURIComponent).join(",")}`,
        `ex=${s.excluded.join(",")}`,
        `yaw=${s.yaw}`,
        `pitch=${s.pitch}`,
    ].join("&");
}

function parseNumber(raw: string | undefined, fallback: number): number {
    if (raw === undefined || raw === "") return fallback;
    const v = Number(raw);
    return Number.isFinite(v) ? v : fallback;
}

export function parseState(fragment: string, known: KnownWorld): ViewState {
    const out = defaultState(known);
    const text = fragment.startsWith("#") ? fragment.slice(1) : fragment;
    if (!text) return out;

    const fields = new Map<string, string>();
    for (const part of text.split("&")) {
        const eq = part.indexOf("=");
        if (eq > 0) fields.set(part.slice(0, eq), part.slice(eq + 1));
    }

    out.tau = clamp(parseNumber(fields.get("tau"), out.tau), 0, 1);
    if (fields.get("mode") === "mean") out.mode = "mean";

    const act = fields.get("act");
    if (act !== undefined) {
        const name = decodeURIComponent(act);
        if (known.activities.includes(name)) out.activity = name;
    }

    const acts = fields.get("acts");
    if (acts !== undefined && acts !== "") {
        const subset = acts
            .split(",")
            .map((a) => decodeURIComponent(a))
            .filter((a) => known.activities.includes(a));
        if (subset.length) out.activities = [...new Set(subset)];
    }

    const ex = fields.get("ex");
    if (ex !== undefined && ex !== "") {
        const validIds = new Set(known.patchIds);
        const ids = ex
            .split(",")
            .map((v) => Number(v))
            .filter((v) => Number.isInteger(v) && validIds.has(v));
        out.excluded = [...new Set(ids)].sort((a, b) => a - b);
    }

    out.yaw = parseNumber(fields.get("yaw"), out.yaw);
    out.pitch = clamp(parseNumber(fields.get("pitch"), out.pitch),
        -PITCH_LIMIT, PITCH_LIMIT);
    return out;
}

/** Toggle one patch in the exclusion set; returns a new sorted array. */
export function toggleExcluded(excluded: number[], id: number): number[] {
    const set = new Set(excluded);
    if (set.has(id)) set.delete(id);
    else set.add(id);
    return [...set].sort((a, b) => a - b);
}
