/** Debounced latest-wins driver for /api/select.
 *
 * Slider drags and exclusion clicks call request() freely; an actual HTTP
 * request fires only after DEBOUNCE_MS of quiet. At most one request is in
 * flight: firing a new one aborts the old, and a response is delivered only
 * if no newer request has been issued since (stale responses are dropped
 * even if the abort raced them). */

import type { SelectRequest, SelectResponse } from "./api.js";
import type { SelectionResult } from "./types.js";

export const DEBOUNCE_MS = 150;

export type SelectRunner = (
    req: SelectRequest,
    signal: AbortSignal,
) => Promise<SelectResponse>;

export class SelectScheduler {
    onResult: (result: SelectionResult, req: SelectRequest, text: string) => void =
        () => {};
    onError: (err: unknown, req: SelectRequest) => void = () => {};

    private seq = 0;
    private timer: ReturnType<typeof setTimeout> | null = null;
    private pending: SelectRequest | null = null;
    private controller: AbortController | null = null;

    constructor(
        private readonly run: SelectRunner,
        private readonly delayMs: number = DEBOUNCE_MS,
    ) {}

    /** Schedule a select; coalesces with any not-yet-fired request. */
    request(req: SelectRequest): void {
        this.pending = req;
        if (this.timer !== null) clearTimeout(this.timer);
        this.timer = setTimeout(() => this.fire(), this.delayMs);
    }

    /** Fire the pending request immediately (initial load, retry button). */
    flush(): void {
        if (this.timer !== null) {
            clearTimeout(this.timer);
            this.fire();
        }
    }

    get inFlight(): boolean {
        return this.controller !== null;
    }

    private fire(): void {
        this.timer = null;
        const req = this.pending;
        if (req === null) return;
        this.pending = null;

        const id = ++this.seq;
        this.controller?.abort();
        const controller = new AbortController();
        this.controller = controller;

        this.run(req, controller.signal).then(
            (resp) => {
                if (id !== this.seq) return; // a newer request owns the view
                this.controller = null;
                this.onResult(resp.result, req, resp.text);
            },
            (err) => {
                if (id !== this.seq || controller.signal.aborted) return;
                this.controller = null;
                this.onError(err, req);
            },
        );
    }
}
