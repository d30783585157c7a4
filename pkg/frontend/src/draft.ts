// Annotation draft state: field values, dirty flags, and the submit gate.
//
// Every field starts unconfirmed; a value reaches the wire only after the
// annotator explicitly set it (or confirmed the visible default), and the
// draft submits only once client-side validation is clean.

import { FreeKickAnnotation, Violation } from "./types.js";
import { validateAnnotation } from "./validation.js";

export const FIELD_NAMES = [
  "pitch_side",
  "freekick_side",
  "freekick_distance",
  "kicker_foot",
  "bogp_label",
  "kick_frame",
  "run_start_frame",
  "run_end_frame",
  "outcome_reached_goal",
  "barrier_config",
  "gender",
  "goalkeeper_zone",
] as const;

export type FieldName = (typeof FIELD_NAMES)[number];

const DEFAULTS: Omit<FreeKickAnnotation, "annotator_id" | "timestamp"> = {
  pitch_side: "left",
  freekick_side: "center_of_goal",
  freekick_distance: "near_box",
  kicker_foot: "right",
  bogp_label: "left",
  kick_frame: -1,
  run_start_frame: -1,
  run_end_frame: -1,
  outcome_reached_goal: true,
  barrier_config: 0,
  gender: "male",
  goalkeeper_zone: "center",
};

export class AnnotationDraft {
  private values: Omit<FreeKickAnnotation, "annotator_id" | "timestamp">;
  private confirmed = new Set<FieldName>();
  dirty = false;

  constructor(
    readonly clipId: string,
    readonly frameCount: number,
    readonly annotatorId: string,
    existing?: FreeKickAnnotation,
  ) {
    this.values = existing ? { ...existing } : { ...DEFAULTS };
    if (existing) {
      for (const f of FIELD_NAMES) this.confirmed.add(f);
    }
  }

  get<K extends FieldName>(field: K) {
    return this.values[field];
  }

  set<K extends FieldName>(field: K, value: (typeof this.values)[K]): void {
    this.values[field] = value;
    this.confirmed.add(field);
    this.dirty = true;
  }

  /** The annotator saw the default and accepted it without changing it. */
  confirmDefault(field: FieldName): void {
    this.confirmed.add(field);
  }

  unconfirmedFields(): FieldName[] {
    return FIELD_NAMES.filter((f) => !this.confirmed.has(f));
  }

  violations(): Violation[] {
    return validateAnnotation(this.toAnnotation(), this.frameCount);
  }

  /** Submit gate: all fields explicitly set/confirmed and rules clean. */
  canSubmit(): boolean {
    return this.unconfirmedFields().length === 0 && this.violations().length === 0;
  }

  toAnnotation(): FreeKickAnnotation {
    return {
      ...this.values,
      annotator_id: this.annotatorId,
      timestamp: new Date().toISOString().replace(/\.\d{3}Z$/, "Z"),
    };
  }

  markSubmitted(): void {
    this.dirty = false;
  }
}
