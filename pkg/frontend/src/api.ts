/** Thin typed client over the explorer service. No computation happens
 * here: every number shown in the UI comes back from these endpoints. */

import type {
    HealthDoc,
    JobRecord,
    PatchSetDoc,
    SelectionResult,
    UtilityColumn,
} from "./types.js";

export class ApiError extends Error {
    constructor(
        public readonly status: number,
        message: string,
    ) {
        super(message);
        this.name = "ApiError";
    }
}

export interface SelectRequest {
    tau: number;
    excluded: number[];
    maxSensors?: number | null;
}

export interface SelectResponse {
    /** exact payload bytes as text, for equivalence checks */
    text: string;
    result: SelectionResult;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

function errorMessage(status: number, body: string): string {
    try {
        const doc = JSON.parse(body) as { error?: string };
        if (doc && typeof doc.error === "string") return doc.error;
    } catch {
        // non-JSON error body: fall through
    }
    return `request failed with status ${status}`;
}

export class ApiClient {
    constructor(
        private readonly base: string = "",
        private readonly fetchImpl: FetchLike = (input, init) =>
            globalThis.fetch(input, init),
    ) {}

    private async getJson<T>(path: string): Promise<T> {
        const resp = await this.fetchImpl(this.base + path);
        const body = await resp.text();
        if (!resp.ok) throw new ApiError(resp.status, errorMessage(resp.status, body));
        return JSON.parse(body) as T;
    }

    health(): Promise<HealthDoc> {
        return this.getJson<HealthDoc>("/api/health");
    }

    patches(): Promise<PatchSetDoc> {
        return this.getJson<PatchSetDoc>("/api/patches");
    }

    async activities(): Promise<string[]> {
        const doc = await this.getJson<{ activities: string[] }>("/api/activities");
        return doc.activities;
    }

    utility(activity: string): Promise<UtilityColumn> {
        return this.getJson<UtilityColumn>(
            `/api/utility?activity=${encodeURIComponent(activity)}`);
    }

    utilityMean(): Promise<UtilityColumn> {
        return this.getJson<UtilityColumn>("/api/utility/mean");
    }

    async select(req: SelectRequest, signal?: AbortSignal): Promise<SelectResponse> {
        const resp = await this.fetchImpl(this.base + "/api/select", {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({
                tau: req.tau,
                excluded: req.excluded,
                max_sensors: req.maxSensors ?? null,
            }),
            signal,
        });
        const text = await resp.text();
        if (!resp.ok) throw new ApiError(resp.status, errorMessage(resp.status, text));
        return { text, result: JSON.parse(text) as SelectionResult };
    }

    async startJob(activities: string[]): Promise<JobRecord> {
        const resp = await this.fetchImpl(this.base + "/api/jobs", {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ activities }),
        });
        const text = await resp.text();
        if (!resp.ok) throw new ApiError(resp.status, errorMessage(resp.status, text));
        return JSON.parse(text) as JobRecord;
    }

    job(id: string): Promise<JobRecord> {
        return this.getJson<JobRecord>(`/api/jobs/${encodeURIComponent(id)}`);
    }
}
