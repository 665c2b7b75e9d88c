/** Payload shapes of the explorer service API (all under /api). */

export interface HealthDoc {
    status: string;
    version: string;
    api: number;
}

export interface PatchInfo {
    id: number;
    vertices: [number, number, number];
    centroid: [number, number, number]; // rest-pose, meters
    label: string | null;
}

export interface PatchSetDoc {
    centers: number[];
    seed: number;
    patches: PatchInfo[];
}

export interface UtilityColumn {
    activity?: string; // absent on the mean endpoint
    locations: number[];
    scores: number[]; // aligned with locations, each in [0, 1]
}

export interface ActivityBest {
    location: number;
    f1: number;
}

export interface SelectRequestDoc {
    tau: number;
    excluded: number[];
    max_sensors: number | null;
}

export interface SelectionResult {
    selected: number[]; // pick order
    coverage: number;
    feasible: boolean;
    per_activity_best: Record<string, ActivityBest>;
    request?: SelectRequestDoc;
}

export interface JobRecord {
    id: string;
    stage: string; // sampling | synthesis | evaluation | done | failed
    progress: number;
    error: string | null;
    activities: string[];
    result?: Record<string, unknown>;
}
