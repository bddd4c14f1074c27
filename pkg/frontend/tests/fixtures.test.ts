import fs from "node:fs";
import path from "node:path";
import { describe, expect, it } from "vitest";
import { TraceRecorder } from "../src/trace.js";

const fixturePath = path.join(__dirname, "fixtures", "gestures.json");
const fixture = JSON.parse(fs.readFileSync(fixturePath, "utf8"));

describe("recorded gesture fixtures", () => {
  it("replaying the recorded pointer events reproduces the stored payload byte-for-byte", () => {
    for (const word of Object.keys(fixture.gestures)) {
      const { events, payload_points } = fixture.gestures[word];
      const rec = new TraceRecorder();
      rec.start(events[0][0], events[0][1]);
      for (const [px, py] of events.slice(1)) rec.extend(px, py);
      const payload = rec.finish(fixture.rect);
      expect(JSON.stringify(payload)).toBe(JSON.stringify(payload_points));
    }
  });

  it("payloads stay within keyboard units", () => {
    for (const word of Object.keys(fixture.gestures)) {
      for (const [x, y] of fixture.gestures[word].payload_points) {
        expect(x).toBeGreaterThanOrEqual(-0.01);
        expect(x).toBeLessThanOrEqual(1.01);
        expect(y).toBeGreaterThanOrEqual(-0.01);
        expect(y).toBeLessThanOrEqual(fixture.rect.aspect + 0.01);
      }
    }
  });
});
