// Client/server validation parity over the shared 50-case fixture set.
//
// The server side of this contract lives in tests/test_validation_contract.py;
// both replay shared/validation_fixtures.json and must agree on every case.

import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";
import { describe, expect, it } from "vitest";

import { validateAnnotation, violationCodes } from "../src/validation.js";
import { FreeKickAnnotation } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixturePath = join(here, "..", "..", "shared", "validation_fixtures.json");

interface FixtureCase {
  name: string;
  frame_count: number;
  annotation: FreeKickAnnotation;
  expected_ok: boolean;
  expected_codes: string[];
}

const cases: FixtureCase[] = JSON.parse(readFileSync(fixturePath, "utf-8")).cases;

describe("shared validation fixtures", () => {
  it("has the full 50-case set with both verdicts", () => {
    expect(cases).toHaveLength(50);
    expect(cases.some((c) => c.expected_ok)).toBe(true);
    expect(cases.some((c) => !c.expected_ok)).toBe(true);
  });

  it.each(cases.map((c) => [c.name, c] as const))(
    "agrees with the server on %s",
    (_name, fixture) => {
      const violations = validateAnnotation(fixture.annotation, fixture.frame_count);
      expect(violations.length === 0).toBe(fixture.expected_ok);
      expect(violationCodes(violations)).toEqual(fixture.expected_codes);
    },
  );
});
