// Live-service integration: drives the real annotation service over HTTP
// through the same client the workbench uses.
//
// Needs python3 with the bogp package installed (the repo root's
// `pip install -e .`); skips cleanly when python3 is absent.

import { spawn, spawnSync, ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { AnnotationApi } from "../src/api.js";
import { FreeKickAnnotation } from "../src/types.js";

const PYTHON = process.env.BOGP_PYTHON ?? "python3";
const PORT = 18750 + Math.floor(Math.random() * 200);
const BASE = `http://127.0.0.1:${PORT}`;

const pythonAvailable =
  spawnSync(PYTHON, ["-c", "import bogp"], { timeout: 30_000 }).status === 0;

function validAnnotation(
  annotator: string,
  frameCount: number,
): FreeKickAnnotation {
  // Last legal kick frame for this clip; the window [kick-16, kick+15]
  // must fit inside [0, frameCount).
  const kick = frameCount - 16;
  return {
    pitch_side: "left",
    freekick_side: "center_of_goal",
    freekick_distance: "near_box",
    kicker_foot: "right",
    bogp_label: "right",
    kick_frame: kick,
    run_start_frame: 5,
    run_end_frame: kick - 2,
    outcome_reached_goal: true,
    barrier_config: 4,
    gender: "male",
    goalkeeper_zone: "center",
    annotator_id: annotator,
    timestamp: "2024-01-01T00:00:00Z",
  };
}

async function frameCountOf(api: AnnotationApi, clipId: string): Promise<number> {
  const list = await api.listClips();
  const clip = list.clips.find((c) => c.clip_id === clipId);
  if (!clip) throw new Error(`unknown clip ${clipId}`);
  return clip.frame_count;
}

describe.runIf(pythonAvailable)("annotation service integration", () => {
  let workdir: string;
  let server: ChildProcess | undefined;

  beforeAll(async () => {
    workdir = mkdtempSync(join(tmpdir(), "bogp-ui-"));
    const setup = spawnSync(
      PYTHON,
      [
        "-c",
        `
import sys
from bogp.synthetic import generate_corpus
from bogp.manifest import read_manifest, write_manifest
root = sys.argv[1]
generate_corpus(root, n_clips=6, seed=5)
records = read_manifest(root + "/manifest.jsonl")
for rec in records:
    rec.annotation = None
write_manifest(root + "/manifest.jsonl", records)
print("ready")
`,
        workdir,
      ],
      { encoding: "utf-8", timeout: 120_000 },
    );
    if (setup.status !== 0) {
      throw new Error(`corpus setup failed: ${setup.stderr}`);
    }
    server = spawn(
      PYTHON,
      [
        "-m",
        "bogp.cli",
        "serve",
        "--manifest",
        join(workdir, "manifest.jsonl"),
        "--clips-root",
        workdir,
        "--port",
        String(PORT),
      ],
      { stdio: ["ignore", "pipe", "pipe"] },
    );
    const deadline = Date.now() + 30_000;
    for (;;) {
      try {
        const resp = await fetch(`${BASE}/clips`);
        if (resp.ok) break;
      } catch {
        /* not up yet */
      }
      if (Date.now() > deadline) throw new Error("service did not come up");
      await new Promise((r) => setTimeout(r, 200));
    }
  }, 120_000);

  afterAll(() => {
    server?.kill("SIGTERM");
    if (workdir) rmSync(workdir, { recursive: true, force: true });
  });

  it("lists the corpus with the manifest version", async () => {
    const api = new AnnotationApi(BASE, "alice");
    const list = await api.listClips("unannotated");
    expect(list.clips).toHaveLength(6);
    expect(list.manifest_version).toBe(0);
    expect(list.clips[0].clip_id).toBe("synth0000");
  });

  it("serves scrubbing frames and rejects out-of-range indexes", async () => {
    const api = new AnnotationApi(BASE, "alice");
    const list = await api.listClips();
    const clip = list.clips[0];
    const frame = await api.getFrame(clip.clip_id, 0);
    expect(frame.type).toBe("image/png");
    expect(frame.size).toBeGreaterThan(0);
    await expect(api.getFrame(clip.clip_id, clip.frame_count)).rejects.toThrow();
  });

  it("submitting a valid draft increments the manifest version by 1", async () => {
    const api = new AnnotationApi(BASE, "alice");
    const before = (await api.listClips()).manifest_version;
    const fc = await frameCountOf(api, "synth0000");
    const result = await api.putAnnotation(
      "synth0000",
      validAnnotation("alice", fc),
      before,
    );
    expect(result.kind).toBe("ok");
    if (result.kind === "ok") {
      expect(result.version).toBe(before + 1);
    }
    const after = (await api.listClips()).manifest_version;
    expect(after).toBe(before + 1);
    const stored = await api.getAnnotation("synth0000");
    expect(stored?.kick_frame).toBe(fc - 16);
  });

  it("two concurrent annotators with stale versions: exactly one succeeds", async () => {
    const alice = new AnnotationApi(BASE, "alice");
    const bob = new AnnotationApi(BASE, "bob");
    const version = (await alice.listClips()).manifest_version;
    const fc1 = await frameCountOf(alice, "synth0001");
    const fc2 = await frameCountOf(bob, "synth0002");
    const [first, second] = await Promise.all([
      alice.putAnnotation("synth0001", validAnnotation("alice", fc1), version),
      bob.putAnnotation("synth0002", validAnnotation("bob", fc2), version),
    ]);
    const kinds = [first.kind, second.kind].sort();
    expect(kinds).toEqual(["conflict", "ok"]);
    const conflict = first.kind === "conflict" ? first : second;
    if (conflict.kind === "conflict") {
      expect(conflict.currentVersion).toBe(version + 1);
      // the retry signal carries the fresh version; retrying succeeds
      const loser = first.kind === "conflict" ? alice : bob;
      const clip = first.kind === "conflict" ? "synth0001" : "synth0002";
      const retryFc = await frameCountOf(loser, clip);
      const retry = await loser.putAnnotation(
        clip,
        validAnnotation("retry", retryFc),
        conflict.currentVersion,
      );
      expect(retry.kind).toBe("ok");
    }
  });

  it("server rejects what the client rejects (spot check over live HTTP)", async () => {
    const api = new AnnotationApi(BASE, "alice");
    const version = (await api.listClips()).manifest_version;
    const fc = await frameCountOf(api, "synth0003");
    const bad = { ...validAnnotation("alice", fc), kick_frame: 3 };
    const result = await api.putAnnotation("synth0003", bad, version);
    expect(result.kind).toBe("invalid");
    if (result.kind === "invalid") {
      expect(result.violations.some((v) => v.code === "kick_window")).toBe(true);
    }
  });

  it("session leases hand different clips to different annotators", async () => {
    const alice = new AnnotationApi(BASE, "alice");
    const bob = new AnnotationApi(BASE, "bob");
    const s1 = await alice.createSession();
    const s2 = await bob.createSession();
    const c1 = await alice.nextClip(s1);
    const c2 = await bob.nextClip(s2);
    expect(c1).not.toBeNull();
    expect(c2).not.toBeNull();
    expect(c1).not.toBe(c2);
  });
});
