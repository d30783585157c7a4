// DOM wiring for the annotation workbench.
//
// Flow: pick/lease a clip, scrub with the keyboard to mark run start/end
// and the exact kick frame, fill the metadata form, hit a BoGP label
// button, submit. Violations from either side render inline; a version
// conflict reloads the clip list and keeps the draft for retry.

import { AnnotationApi } from "./api.js";
import { AnnotationDraft, FIELD_NAMES, FieldName } from "./draft.js";
import { KEY_BINDINGS, Scrubber } from "./scrubber.js";
import { ClipSummary } from "./types.js";

const params = new URLSearchParams(window.location.search);
const api = new AnnotationApi(
  params.get("api") ?? "http://127.0.0.1:8008",
  params.get("annotator") ?? "anonymous",
);

let manifestVersion = 0;
let clips: ClipSummary[] = [];
let current: ClipSummary | null = null;
let scrubber: Scrubber | null = null;
let draft: AnnotationDraft | null = null;
const labelClickLog: { label: string; at: string }[] = [];

const $ = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

function setStatus(text: string, kind: "info" | "error" | "ok" = "info"): void {
  const el = $("status");
  el.textContent = text;
  el.className = `status ${kind}`;
}

async function refreshClipList(): Promise<void> {
  const list = await api.listClips("all");
  manifestVersion = list.manifest_version;
  clips = list.clips;
  const box = $("clip-list");
  box.innerHTML = "";
  for (const clip of clips) {
    const item = document.createElement("button");
    item.className = `clip ${clip.annotated ? "done" : "todo"}`;
    item.textContent = `${clip.clip_id} (${clip.frame_count}f)${clip.annotated ? " ✓" : ""}`;
    item.onclick = () => loadClip(clip);
    box.appendChild(item);
  }
  $("version").textContent = `manifest v${manifestVersion}`;
}

function showFrame(): void {
  if (!current || !scrubber) return;
  const img = $("frame") as HTMLImageElement;
  img.src = api.frameUrl(current.clip_id, scrubber.current);
  $("frame-index").textContent = `frame ${scrubber.current} / ${current.frame_count - 1}`;
}

function prefetchNextClip(): void {
  const next = clips.find((c) => !c.annotated && c.clip_id !== current?.clip_id);
  if (!next) return;
  for (let i = 0; i < 3; i++) {
    const img = new Image();
    img.src = api.frameUrl(next.clip_id, i);
  }
}

async function loadClip(clip: ClipSummary): Promise<void> {
  current = clip;
  scrubber = new Scrubber(clip.frame_count);
  const existing = clip.annotated ? await api.getAnnotation(clip.clip_id) : null;
  draft = new AnnotationDraft(
    clip.clip_id,
    clip.frame_count,
    api.annotatorId,
    existing ?? undefined,
  );
  $("clip-title").textContent = clip.clip_id;
  renderForm();
  showFrame();
  renderMarks();
  setStatus(existing ? "editing existing annotation" : "new clip loaded");
  prefetchNextClip();
}

function renderMarks(): void {
  if (!draft) return;
  const fmt = (v: number) => (v < 0 ? "—" : String(v));
  $("mark-run-start").textContent = `run start: ${fmt(draft.get("run_start_frame") as number)}`;
  $("mark-run-end").textContent = `run end: ${fmt(draft.get("run_end_frame") as number)}`;
  $("mark-kick").textContent = `kick: ${fmt(draft.get("kick_frame") as number)}`;
}

function renderViolations(codes: { code: string; message: string }[]): void {
  for (const field of FIELD_NAMES) {
    const slot = document.getElementById(`err-${field}`);
    if (slot) slot.textContent = "";
  }
  const general = $("violations");
  general.innerHTML = "";
  for (const v of codes) {
    const slot = document.getElementById(`err-${v.code}`);
    if (slot) {
      slot.textContent = v.message;
    } else {
      const li = document.createElement("li");
      li.textContent = `${v.code}: ${v.message}`;
      general.appendChild(li);
    }
  }
}

function renderForm(): void {
  if (!draft) return;
  const selects: [FieldName, string[]][] = [
    ["pitch_side", ["left", "right"]],
    ["freekick_side", ["left_of_goal", "center_of_goal", "right_of_goal"]],
    ["freekick_distance", ["near_box", "far_box"]],
    ["kicker_foot", ["left", "right"]],
    ["gender", ["male", "female"]],
    ["goalkeeper_zone", ["left", "center", "right"]],
  ];
  for (const [field, options] of selects) {
    const select = $(`field-${field}`) as HTMLSelectElement;
    select.innerHTML = "";
    for (const opt of options) {
      const o = document.createElement("option");
      o.value = opt;
      o.textContent = opt.replaceAll("_", " ");
      select.appendChild(o);
    }
    select.value = String(draft.get(field));
    select.onchange = () => draft?.set(field, select.value as never);
    // focusing counts as seeing the default
    select.onblur = () => draft?.confirmDefault(field);
  }
  const barrier = $("field-barrier_config") as HTMLInputElement;
  barrier.value = String(draft.get("barrier_config"));
  barrier.onchange = () => draft?.set("barrier_config", Number(barrier.value) as never);
  barrier.onblur = () => draft?.confirmDefault("barrier_config");
  const outcome = $("field-outcome_reached_goal") as HTMLInputElement;
  outcome.checked = Boolean(draft.get("outcome_reached_goal"));
  outcome.onchange = () => draft?.set("outcome_reached_goal", outcome.checked as never);
  outcome.onblur = () => draft?.confirmDefault("outcome_reached_goal");
}

async function submit(): Promise<void> {
  if (!draft || !current) return;
  const unconfirmed = draft.unconfirmedFields();
  if (unconfirmed.length > 0) {
    setStatus(`confirm fields first: ${unconfirmed.join(", ")}`, "error");
    return;
  }
  const clientViolations = draft.violations();
  if (clientViolations.length > 0) {
    renderViolations(clientViolations);
    setStatus("draft invalid; fix the highlighted fields", "error");
    return;
  }
  let result;
  try {
    result = await api.putAnnotation(
      current.clip_id,
      draft.toAnnotation(),
      manifestVersion,
    );
  } catch (err) {
    setStatus(`network failure (${err}); draft kept, retry when online`, "error");
    return;
  }
  if (result.kind === "ok") {
    manifestVersion = result.version;
    draft.markSubmitted();
    renderViolations([]);
    setStatus(`saved ${current.clip_id} (manifest v${result.version})`, "ok");
    await refreshClipList();
    const next = clips.find((c) => !c.annotated);
    if (next) await loadClip(next);
  } else if (result.kind === "conflict") {
    setStatus(
      `someone else saved first (v${result.currentVersion}); list reloaded, submit again`,
      "error",
    );
    await refreshClipList();
  } else {
    renderViolations(result.violations);
    setStatus("server rejected the draft; fields highlighted", "error");
  }
}

function wireControls(): void {
  document.addEventListener("keydown", (ev) => {
    if (!scrubber || ev.target instanceof HTMLInputElement) return;
    const delta = KEY_BINDINGS[ev.key];
    if (delta !== undefined) {
      scrubber.step(delta);
      showFrame();
      ev.preventDefault();
    }
  });
  $("btn-back10").onclick = () => { scrubber?.step(-10); showFrame(); };
  $("btn-back1").onclick = () => { scrubber?.step(-1); showFrame(); };
  $("btn-fwd1").onclick = () => { scrubber?.step(1); showFrame(); };
  $("btn-fwd10").onclick = () => { scrubber?.step(10); showFrame(); };
  $("mark-run-start").onclick = () => {
    draft?.set("run_start_frame", scrubber!.current as never);
    renderMarks();
  };
  $("mark-run-end").onclick = () => {
    draft?.set("run_end_frame", scrubber!.current as never);
    renderMarks();
  };
  $("mark-kick").onclick = () => {
    draft?.set("kick_frame", scrubber!.current as never);
    renderMarks();
  };
  $("btn-jump-kick").onclick = () => {
    const kick = draft?.get("kick_frame") as number;
    if (kick >= 0) {
      scrubber?.seek(kick);
      showFrame();
    }
  };
  for (const label of ["left", "center", "right"]) {
    $(`label-${label}`).onclick = () => {
      draft?.set("bogp_label", label as never);
      labelClickLog.push({ label, at: new Date().toISOString() });
      document
        .querySelectorAll(".label-btn")
        .forEach((b) => b.classList.remove("active"));
      $(`label-${label}`).classList.add("active");
    };
  }
  $("btn-submit").onclick = () => void submit();
  $("btn-next").onclick = async () => {
    await refreshClipList();
    const next = clips.find((c) => !c.annotated);
    if (next) await loadClip(next);
    else setStatus("no unannotated clips left", "ok");
  };
}

async function start(): Promise<void> {
  wireControls();
  try {
    await refreshClipList();
    setStatus(`connected to ${api.baseUrl}`);
    const first = clips.find((c) => !c.annotated) ?? clips[0];
    if (first) await loadClip(first);
  } catch (err) {
    setStatus(`cannot reach the annotation service: ${err}`, "error");
  }
}

void start();
