// Keyboard event -> protocol command; unmapped keys yield null.

import { Command, PressName } from "./protocol.js";

const PRESS_KEYS: Record<string, PressName> = {
  Backspace: "backspace",
  Delete: "delete",
  ArrowLeft: "left",
  ArrowRight: "right",
  ArrowUp: "up",
  ArrowDown: "down",
  Home: "home",
  End: "end",
};

export interface KeyEventLike {
  key: string;
  ctrlKey: boolean;
  metaKey: boolean;
  altKey: boolean;
  shiftKey: boolean;
}

export function keystrokeToCommand(event: KeyEventLike): Command | null {
  const modifier = event.ctrlKey || event.metaKey;
  if (modifier && !event.altKey) {
    switch (event.key.toLowerCase()) {
      case "z":
        return event.shiftKey ? { type: "redo" } : { type: "undo" };
      case "y":
        return { type: "redo" };
      case "x":
        return { type: "cut" };
      case "c":
        return { type: "copy" };
      case "v":
        return { type: "paste" };
      default:
        return null;
    }
  }
  if (event.key in PRESS_KEYS) {
    return { type: "press", name: PRESS_KEYS[event.key] };
  }
  if (event.key === "(") return { type: "bracket", side: "open" };
  if (event.key === ")") return { type: "bracket", side: "close" };
  if (event.key.length === 1 && !modifier && !event.altKey) {
    if (event.key === " ") return null; // no whitespace in formulas
    return { type: "key", char: event.key };
  }
  return null;
}
