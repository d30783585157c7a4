// Client-side draft validation.
//
// Must stay rule-for-rule identical to the server validator: any draft the
// client accepts, the server accepts. The shared fixture set under
// ../shared/validation_fixtures.json pins both sides; change the rules only
// together with a fixture regeneration.

import {
  BOGP_LABELS,
  FEET,
  FREEKICK_DISTANCES,
  FREEKICK_SIDES,
  FreeKickAnnotation,
  GENDERS,
  KICK_WINDOW_AFTER,
  KICK_WINDOW_BEFORE,
  PITCH_SIDES,
  Violation,
} from "./types.js";

function oneOf(values: readonly string[], v: string): boolean {
  return values.includes(v);
}

export function validateAnnotation(
  ann: FreeKickAnnotation,
  frameCount: number,
): Violation[] {
  const v: Violation[] = [];
  if (!oneOf(PITCH_SIDES, ann.pitch_side)) {
    v.push({ code: "pitch_side", message: `pitch_side must be one of ${PITCH_SIDES.join(", ")}` });
  }
  if (!oneOf(FREEKICK_SIDES, ann.freekick_side)) {
    v.push({ code: "freekick_side", message: `freekick_side must be one of ${FREEKICK_SIDES.join(", ")}` });
  }
  if (!oneOf(FREEKICK_DISTANCES, ann.freekick_distance)) {
    v.push({ code: "freekick_distance", message: `freekick_distance must be one of ${FREEKICK_DISTANCES.join(", ")}` });
  }
  if (!oneOf(FEET, ann.kicker_foot)) {
    v.push({ code: "kicker_foot", message: `kicker_foot must be one of ${FEET.join(", ")}` });
  }
  if (!oneOf(BOGP_LABELS, ann.bogp_label)) {
    v.push({ code: "bogp_label", message: `bogp_label must be one of ${BOGP_LABELS.join(", ")}` });
  }
  if (!oneOf(GENDERS, ann.gender)) {
    v.push({ code: "gender", message: `gender must be one of ${GENDERS.join(", ")}` });
  }
  if (ann.barrier_config < 0 || ann.barrier_config > 11) {
    v.push({ code: "barrier_config", message: "barrier_config must be between 0 and 11" });
  }
  if (ann.run_start_frame < 0) {
    v.push({ code: "run_start_frame", message: "run_start_frame must be >= 0" });
  }
  if (ann.run_start_frame > ann.run_end_frame) {
    v.push({ code: "run_interval", message: "run interval reversed" });
  }
  if (ann.run_end_frame >= ann.kick_frame) {
    v.push({ code: "run_interval", message: "run interval must end before the kick frame" });
  }
  if (ann.kick_frame - KICK_WINDOW_BEFORE < 0) {
    v.push({ code: "kick_window", message: "kicking window underflows frame 0" });
  }
  if (ann.kick_frame + KICK_WINDOW_AFTER > frameCount) {
    v.push({ code: "kick_window", message: "kicking window overruns the clip end" });
  }
  if (ann.run_end_frame >= frameCount) {
    v.push({ code: "run_interval", message: "run interval overruns the clip end" });
  }
  return v;
}

export function violationCodes(violations: Violation[]): string[] {
  return [...new Set(violations.map((v) => v.code))].sort();
}
