/** Fixed absolute color scale for F1 scores: score 0.0 maps to the first
 * stop, 1.0 to the last, linear interpolation between evenly spaced stops.
 * The scale never rescales to the data, so the same score is always the
 * same color across activities and workspaces. */

export const SCALE_STOPS: ReadonlyArray<readonly [number, number, number]> = [
    [68, 1, 84], // 0.00 dark violet
    [59, 82, 139], // 0.25 blue
    [33, 145, 140], // 0.50 teal
    [94, 201, 98], // 0.75 green
    [253, 231, 37], // 1.00 yellow
];

export function scoreToColor(score: number): string {
    const s = Number.isFinite(score) ? Math.min(1, Math.max(0, score)) : 0;
    const x = s * (SCALE_STOPS.length - 1);
    const i = Math.min(SCALE_STOPS.length - 2, Math.floor(x));
    const f = x - i;
    const lo = SCALE_STOPS[i];
    const hi = SCALE_STOPS[i + 1];
    const mix = (k: 0 | 1 | 2) => Math.round(lo[k] + f * (hi[k] - lo[k]));
    return `rgb(${mix(0)},${mix(1)},${mix(2)})`;
}

/** CSS gradient matching the scale, for the legend bar. */
export function scaleGradient(): string {
    const stops = SCALE_STOPS.map(
        (c, i) => `rgb(${c[0]},${c[1]},${c[2]}) ${(100 * i) / (SCALE_STOPS.length - 1)}%`,
    );
    return `linear-gradient(to right, ${stops.join(", ")})`;
}

/** Tick values to mark on the legend. Uniform data collapses to the single
 * observed value; otherwise the observed min and max are marked. */
export function legendTicks(scores: number[]): number[] {
    if (!scores.length) return [];
    let lo = Infinity;
    let hi = -Infinity;
    for (const v of scores) {
        if (v < lo) lo = v;
        if (v > hi) hi = v;
    }
    return lo === hi ? [lo] : [lo, hi];
}
