// Thin client for the annotation service HTTP/JSON interface.

import { ClipList, FreeKickAnnotation, PutResult } from "./types.js";

export class AnnotationApi {
  constructor(
    readonly baseUrl: string,
    readonly annotatorId: string,
  ) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, "")}${path}`;
  }

  async listClips(filter: "all" | "unannotated" = "all"): Promise<ClipList> {
    const resp = await fetch(this.url(`/clips?filter=${filter}`));
    if (!resp.ok) throw new Error(`list_clips failed: ${resp.status}`);
    return (await resp.json()) as ClipList;
  }

  frameUrl(clipId: string, index: number): string {
    return this.url(`/clips/${encodeURIComponent(clipId)}/frames/${index}`);
  }

  async getFrame(clipId: string, index: number): Promise<Blob> {
    const resp = await fetch(this.frameUrl(clipId, index));
    if (!resp.ok) throw new Error(`frame ${index} unavailable: ${resp.status}`);
    return await resp.blob();
  }

  async getAnnotation(clipId: string): Promise<FreeKickAnnotation | null> {
    const resp = await fetch(this.url(`/clips/${encodeURIComponent(clipId)}/annotation`));
    if (resp.status === 404) return null;
    if (!resp.ok) throw new Error(`get_annotation failed: ${resp.status}`);
    const body = await resp.json();
    return body.annotation as FreeKickAnnotation;
  }

  async putAnnotation(
    clipId: string,
    annotation: FreeKickAnnotation,
    expectedVersion: number,
  ): Promise<PutResult> {
    const resp = await fetch(this.url(`/clips/${encodeURIComponent(clipId)}/annotation`), {
      method: "PUT",
      headers: {
        "Content-Type": "application/json",
        "X-Annotator-Id": this.annotatorId,
      },
      body: JSON.stringify({ annotation, expected_version: expectedVersion }),
    });
    if (resp.status === 200) {
      const body = await resp.json();
      return { kind: "ok", version: body.version };
    }
    if (resp.status === 409) {
      const body = await resp.json();
      return { kind: "conflict", currentVersion: body.detail.current_version };
    }
    if (resp.status === 422) {
      const body = await resp.json();
      const violations = Array.isArray(body.detail?.violations)
        ? body.detail.violations
        : [];
      return { kind: "invalid", violations };
    }
    throw new Error(`put_annotation failed: ${resp.status}`);
  }

  async createSession(): Promise<string> {
    const resp = await fetch(this.url("/sessions"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ annotator_id: this.annotatorId }),
    });
    if (!resp.ok) throw new Error(`create_session failed: ${resp.status}`);
    return (await resp.json()).session_id as string;
  }

  async nextClip(sessionId: string): Promise<string | null> {
    const resp = await fetch(this.url(`/sessions/${sessionId}/next`));
    if (!resp.ok) throw new Error(`next_clip failed: ${resp.status}`);
    return (await resp.json()).clip_id as string | null;
  }
}
