// Wire protocol types for the semedit session service.
// Command types mirror the script grammar verbs one to one.

export type Command =
  | { type: "key"; char: string }
  | { type: "press"; name: PressName }
  | { type: "template"; id: string }
  | { type: "bracket"; side: "open" | "close" }
  | { type: "select"; anchor: string; focus: string }
  | { type: "mode"; mode: "basic" | "legacy" }
  | { type: "cut" }
  | { type: "copy" }
  | { type: "paste" }
  | { type: "undo" }
  | { type: "redo" }
  | { type: "templates" };

export type PressName =
  | "backspace" | "delete" | "left" | "right"
  | "up" | "down" | "home" | "end";

export interface TransformEvent {
  name: string;
  [detail: string]: unknown;
}

export interface TemplateInfo {
  id: string;
  glyphs: string[];
  arity: number;
}

export interface StateResponse {
  seq: number;
  status: "applied" | "no_effect" | "rejected" | "error" | "ok";
  reason: string | null;
  content_mathml: string;
  presentation_mathml: string;
  caret: string;
  mode: "basic" | "legacy";
  pending_token: string;
  transform_log: TransformEvent[];
  diagnostics: string[];
  templates?: TemplateInfo[];
}

export interface Request {
  session: string;
  seq: number;
  command: Command;
}

export function isStateResponse(value: unknown): value is StateResponse {
  if (typeof value !== "object" || value === null) return false;
  const v = value as Record<string, unknown>;
  return typeof v.seq === "number" && typeof v.status === "string" &&
    typeof v.content_mathml === "string";
}
