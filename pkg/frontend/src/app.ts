// Wiring: keyboard -> session -> view, palette and mode toggle.

import { UiSession } from "./connection.js";
import { keystrokeToCommand } from "./keymap.js";
import { buildPalette } from "./palette.js";
import { StateResponse } from "./protocol.js";
import { EditorView } from "./view.js";

function requireElement(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el;
}

export function startApp(): void {
  const view = new EditorView({
    formulaPane: requireElement("formula"),
    sourcePane: requireElement("source"),
    statusBar: requireElement("status"),
    noticeArea: requireElement("notice"),
    modeLabel: requireElement("mode-label"),
  });
  const editor = requireElement("editor");
  const palette = requireElement("palette");
  const modeToggle = requireElement("mode-toggle") as HTMLButtonElement;

  let inputEnabled = false;
  let mode: "basic" | "legacy" = "basic";

  const sessionId = sessionStorage.getItem("semedit-session") ??
    `ui-${Math.random().toString(36).slice(2, 10)}`;
  sessionStorage.setItem("semedit-session", sessionId);

  const session = new UiSession(sessionId, {
    onState(response: StateResponse) {
      if (response.templates) {
        buildPalette(palette, response.templates,
          (command) => session.send(command));
        // the listing carries full session state too, so a reload
        // reproduces the identical view (session resume by id)
      }
      mode = response.mode;
      view.render(response);
    },
    onProtocolError(message: string) {
      inputEnabled = false;
      view.showConnectionError(message);
    },
    onConnectionChange(connected: boolean) {
      inputEnabled = connected;
      if (connected) {
        view.clearConnectionError();
        session.send({ type: "templates" });
      } else {
        view.showConnectionError("disconnected");
      }
    },
  });

  const proto = location.protocol === "https:" ? "wss" : "ws";
  session.attach(new WebSocket(`${proto}://${location.host}/ws`));

  editor.addEventListener("keydown", (event: KeyboardEvent) => {
    if (!inputEnabled) return;
    const command = keystrokeToCommand(event);
    if (command === null) return;
    event.preventDefault();
    session.send(command);
  });

  modeToggle.addEventListener("click", () => {
    const next = mode === "basic" ? "legacy" : "basic";
    session.send({ type: "mode", mode: next });
  });

  editor.focus();
}

startApp();
