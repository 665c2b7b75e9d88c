import { describe, expect, it } from "vitest";

import {
    DEFAULT_TAU,
    defaultState,
    parseState,
    serializeState,
    toggleExcluded,
} from "../src/state.js";
import type { KnownWorld, ViewState } from "../src/state.js";

// one activity name with a space to exercise percent-encoding
const KNOWN: KnownWorld = {
    activities: ["arm_only", "leg_only", "climb stairs"],
    patchIds: [0, 1, 2, 3, 10, 42],
};

describe("serializeState / parseState", () => {
    it("round-trips the default state", () => {
        const s = defaultState(KNOWN);
        expect(parseState(serializeState(s), KNOWN)).toEqual(s);
    });

    it("round-trips a fully customized state at full float precision", () => {
        const s: ViewState = {
            activities: ["leg_only", "climb stairs"],
            activity: "climb stairs",
            mode: "mean",
            tau: 0.123456789012345,
            excluded: [1, 10, 42],
            yaw: -2.5,
            pitch: 0.7,
        };
        const frag = serializeState(s);
        expect(parseState(frag, KNOWN)).toEqual(s);
        expect(parseState(`#${frag}`, KNOWN)).toEqual(s); // leading # tolerated
    });

    it("round-trips seeded random states", () => {
        let x = 12345;
        const rnd = () => {
            // LCG, plenty for test-case generation
            x = (x * 1103515245 + 12345) % 2147483648;
            return x / 2147483648;
        };
        for (let trial = 0; trial < 50; trial++) {
            const subset = KNOWN.activities.filter(() => rnd() < 0.6);
            const excluded = KNOWN.patchIds.filter(() => rnd() < 0.4);
            const s: ViewState = {
                activities: subset.length ? subset : [KNOWN.activities[0]],
                activity: KNOWN.activities[Math.floor(rnd() * 3)],
                mode: rnd() < 0.5 ? "mean" : "activity",
                tau: rnd(),
                excluded,
                yaw: (rnd() - 0.5) * 20,
                pitch: (rnd() - 0.5) * Math.PI,
            };
            expect(parseState(serializeState(s), KNOWN)).toEqual(s);
        }
    });

    it("returns defaults for empty or garbage fragments", () => {
        const d = defaultState(KNOWN);
        expect(parseState("", KNOWN)).toEqual(d);
        expect(parseState("#", KNOWN)).toEqual(d);
        expect(parseState("#complete&&&garbage==x&=9", KNOWN)).toEqual(d);
    });

    it("clamps tau into [0, 1] and rejects non-numeric tau", () => {
        expect(parseState("#tau=3", KNOWN).tau).toBe(1);
        expect(parseState("#tau=-0.5", KNOWN).tau).toBe(0);
        expect(parseState("#tau=abc", KNOWN).tau).toBe(DEFAULT_TAU);
        // non-finite values are rejected, not clamped
        expect(parseState("#tau=Infinity", KNOWN).tau).toBe(DEFAULT_TAU);
    });

    it("ignores unknown activities", () => {
        expect(parseState("#act=nope", KNOWN).activity).toBe("arm_only");
        expect(parseState("#act=leg_only", KNOWN).activity).toBe("leg_only");
        expect(parseState("#acts=nope,also_nope", KNOWN).activities)
            .toEqual(KNOWN.activities);
    });

    it("filters, dedupes and sorts excluded ids", () => {
        const s = parseState("#ex=10,2,999,2,x,1.5", KNOWN);
        expect(s.excluded).toEqual([2, 10]);
    });

    it("dedupes the activity subset", () => {
        const s = parseState("#acts=leg_only,leg_only,arm_only", KNOWN);
        expect(s.activities).toEqual(["leg_only", "arm_only"]);
    });

    it("clamps pitch but leaves yaw unbounded", () => {
        const s = parseState("#yaw=9.5&pitch=3.0", KNOWN);
        expect(s.yaw).toBe(9.5);
        expect(s.pitch).toBeCloseTo(Math.PI / 2, 12);
        expect(parseState("#pitch=-3.0", KNOWN).pitch)
            .toBeCloseTo(-Math.PI / 2, 12);
    });
});

describe("toggleExcluded", () => {
    it("adds, removes, and keeps the array sorted", () => {
        expect(toggleExcluded([], 5)).toEqual([5]);
        expect(toggleExcluded([5], 2)).toEqual([2, 5]);
        expect(toggleExcluded([2, 5], 5)).toEqual([2]);
    });

    it("does not mutate its input", () => {
        const input = [1, 3];
        toggleExcluded(input, 2);
        expect(input).toEqual([1, 3]);
    });
});
