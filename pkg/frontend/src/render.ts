/** Scene construction and hit-testing are pure (tested); actual canvas
 * drawing is the thin bit at the bottom. */

import { scoreToColor } from "./color.js";
import type { Camera, Viewport } from "./projection.js";
import { fitCloud, projectCloud } from "./projection.js";
import type { PatchInfo } from "./types.js";

export interface DrawPoint {
    id: number;
    label: string | null;
    score: number | null; // null = no utility data for this patch
    x: number;
    y: number;
    depth: number;
    radius: number;
    color: string;
    selected: boolean;
    excluded: boolean;
}

const EXCLUDED_COLOR = "#4a4a52";
const NO_DATA_COLOR = "#777";

export function buildScene(
    patches: ReadonlyArray<PatchInfo>,
    scoreById: ReadonlyMap<number, number>,
    selected: ReadonlySet<number>,
    excluded: ReadonlySet<number>,
    cam: Camera,
    vp: Viewport,
): DrawPoint[] {
    const positions = patches.map((p) => p.centroid);
    const projected = projectCloud(positions, cam, vp, fitCloud(positions));
    const points = patches.map((p, i) => {
        const score = scoreById.has(p.id) ? scoreById.get(p.id)! : null;
        const isExcluded = excluded.has(p.id);
        let color = NO_DATA_COLOR;
        if (isExcluded) color = EXCLUDED_COLOR;
        else if (score !== null) color = scoreToColor(score);
        return {
            id: p.id,
            label: p.label,
            score,
            x: projected[i].x,
            y: projected[i].y,
            depth: projected[i].depth,
            radius: selected.has(p.id) ? 8 : 6,
            color,
            selected: selected.has(p.id),
            excluded: isExcluded,
        };
    });
    points.sort((a, b) => a.depth - b.depth); // far first, near drawn on top
    return points;
}

/** Topmost point under the cursor (scene is far-to-near, so scan back). */
export function hitTest(points: ReadonlyArray<DrawPoint>, x: number, y: number): DrawPoint | null {
    for (let i = points.length - 1; i >= 0; i--) {
        const p = points[i];
        const d = Math.hypot(p.x - x, p.y - y);
        if (d <= p.radius + 2) return p;
    }
    return null;
}

export function drawScene(
    ctx: CanvasRenderingContext2D,
    vp: Viewport,
    points: ReadonlyArray<DrawPoint>,
): void {
    ctx.clearRect(0, 0, vp.width, vp.height);
    for (const p of points) {
        ctx.beginPath();
        ctx.arc(p.x, p.y, p.radius, 0, 2 * Math.PI);
        ctx.fillStyle = p.color;
        ctx.globalAlpha = p.excluded ? 0.45 : 1.0;
        ctx.fill();
        ctx.globalAlpha = 1.0;
        if (p.excluded) {
            // slash mark so exclusion reads even at a glance
            ctx.beginPath();
            ctx.moveTo(p.x - p.radius, p.y + p.radius);
            ctx.lineTo(p.x + p.radius, p.y - p.radius);
            ctx.strokeStyle = "#b55";
            ctx.lineWidth = 1.5;
            ctx.stroke();
        }
        if (p.selected) {
            ctx.beginPath();
            ctx.arc(p.x, p.y, p.radius + 3, 0, 2 * Math.PI);
            ctx.strokeStyle = "#fff";
            ctx.lineWidth = 2;
            ctx.stroke();
        }
    }
}
