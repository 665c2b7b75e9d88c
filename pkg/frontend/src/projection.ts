/** Minimal orthographic 3D: yaw about the world up axis (y), then pitch
 * about the camera x axis, then drop z. Zoom is fixed from the cloud's
 * bounding radius so rotating never rescales the view. */

export type Vec3 = readonly [number, number, number];

export interface Camera {
    yaw: number;
    pitch: number;
}

export interface Viewport {
    width: number;
    height: number;
    margin: number; // pixels kept clear on every side
}

export interface Projected {
    x: number; // canvas px, +x right
    y: number; // canvas px, +y down
    depth: number; // larger = closer to the viewer
}

export function rotatePoint(p: Vec3, yaw: number, pitch: number): [number, number, number] {
    const cy = Math.cos(yaw);
    const sy = Math.sin(yaw);
    const x1 = cy * p[0] + sy * p[2];
    const z1 = -sy * p[0] + cy * p[2];
    const cx = Math.cos(pitch);
    const sx = Math.sin(pitch);
    const y2 = cx * p[1] - sx * z1;
    const z2 = sx * p[1] + cx * z1;
    return [x1, y2, z2];
}

export interface CloudFit {
    center: [number, number, number];
    radius: number;
}

export function fitCloud(points: ReadonlyArray<Vec3>): CloudFit {
    if (!points.length) return { center: [0, 0, 0], radius: 1 };
    const c: [number, number, number] = [0, 0, 0];
    for (const p of points) {
        c[0] += p[0];
        c[1] += p[1];
        c[2] += p[2];
    }
    c[0] /= points.length;
    c[1] /= points.length;
    c[2] /= points.length;
    let r = 0;
    for (const p of points) {
        const d = Math.hypot(p[0] - c[0], p[1] - c[1], p[2] - c[2]);
        if (d > r) r = d;
    }
    return { center: c, radius: r || 1 };
}

export function projectCloud(
    points: ReadonlyArray<Vec3>,
    cam: Camera,
    vp: Viewport,
    fit?: CloudFit,
): Projected[] {
    const { center, radius } = fit ?? fitCloud(points);
    const scale = (Math.min(vp.width, vp.height) / 2 - vp.margin) / radius;
    return points.map((p) => {
        const q = rotatePoint(
            [p[0] - center[0], p[1] - center[1], p[2] - center[2]],
            cam.yaw, cam.pitch);
        return {
            x: vp.width / 2 + q[0] * scale,
            y: vp.height / 2 - q[1] * scale,
            depth: q[2] * scale,
        };
    });
}
