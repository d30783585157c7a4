// Wire types matching the annotation service JSON contract.

export const PITCH_SIDES = ["left", "right"] as const;
export const FREEKICK_SIDES = [
  "left_of_goal",
  "center_of_goal",
  "right_of_goal",
] as const;
export const FREEKICK_DISTANCES = ["near_box", "far_box"] as const;
export const FEET = ["left", "right"] as const;
export const BOGP_LABELS = ["left", "center", "right"] as const;
export const GENDERS = ["male", "female"] as const;

// The kicking stage spans kick-16 .. kick+15; both bounds must fit the clip.
export const KICK_WINDOW_BEFORE = 16;
export const KICK_WINDOW_AFTER = 16;

export interface FreeKickAnnotation {
  pitch_side: string;
  freekick_side: string;
  freekick_distance: string;
  kicker_foot: string;
  bogp_label: string;
  kick_frame: number;
  run_start_frame: number;
  run_end_frame: number;
  outcome_reached_goal: boolean;
  barrier_config: number;
  gender: string;
  goalkeeper_zone: string;
  annotator_id: string;
  timestamp: string;
  kicker_track_id?: string;
}

export interface ClipSummary {
  clip_id: string;
  frame_count: number;
  width: number;
  height: number;
  fps: number;
  annotated: boolean;
  excluded: string | null;
}

export interface ClipList {
  manifest_version: number;
  clips: ClipSummary[];
}

export interface Violation {
  code: string;
  message: string;
}

export type PutResult =
  | { kind: "ok"; version: number }
  | { kind: "conflict"; currentVersion: number }
  | { kind: "invalid"; violations: Violation[] };
