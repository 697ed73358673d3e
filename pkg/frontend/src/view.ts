// Rendering: the view is a pure function of the last response plus the
// connection status.  Presentation MathML is handed to the browser's
// native MathML support; the source pane shows pretty-printed Content
// MathML; transform events flash a highlight over the formula pane.

import { StateResponse } from "./protocol.js";
import { prettyXml } from "./xmlpretty.js";

export interface ViewElements {
  formulaPane: HTMLElement;
  sourcePane: HTMLElement;
  statusBar: HTMLElement;
  noticeArea: HTMLElement;
  modeLabel: HTMLElement;
}

export const REJECTED_NOTICES: Record<string, string> = {
  ProtectedNoOp: "this placeholder can't be deleted",
  ReadOnlyTarget: "that part of the template is read-only",
  NoSelection: "select something first",
  EmptyClipboard: "the clipboard is empty",
  UnknownTemplate: "no such template",
  PathInvalid: "that position no longer exists",
};

export const HIGHLIGHT_MS = 300;

export class EditorView {
  private el: ViewElements;
  private highlightTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(elements: ViewElements) {
    this.el = elements;
  }

  render(response: StateResponse): void {
    this.el.formulaPane.innerHTML = response.presentation_mathml;
    this.el.sourcePane.textContent = prettyXml(response.content_mathml);
    this.renderStatus(response);
    this.el.modeLabel.textContent = response.mode;
    this.renderNotice(response);
    if (response.transform_log.length > 0) {
      this.flash(response.transform_log.map((e) => e.name));
    }
  }

  private renderStatus(response: StateResponse): void {
    const caret = document.createElement("span");
    caret.className = "caret-indicator";
    caret.textContent = `caret ${response.caret}`;
    this.el.statusBar.replaceChildren(caret);
    if (response.pending_token) {
      const pending = document.createElement("span");
      pending.className = "pending-token";
      pending.textContent = response.pending_token;
      this.el.statusBar.append(" typing: ", pending);
    }
  }

  private renderNotice(response: StateResponse): void {
    if (response.status === "rejected") {
      const reason = response.reason ?? "rejected";
      this.el.noticeArea.textContent =
        REJECTED_NOTICES[reason] ?? `rejected: ${reason}`;
      this.el.noticeArea.classList.add("visible");
    } else {
      this.el.noticeArea.textContent = "";
      this.el.noticeArea.classList.remove("visible");
    }
  }

  private flash(eventNames: string[]): void {
    const pane = this.el.formulaPane;
    pane.classList.add("transform-flash");
    pane.dataset.lastTransforms = eventNames.join(",");
    if (this.highlightTimer !== null) clearTimeout(this.highlightTimer);
    this.highlightTimer = setTimeout(() => {
      pane.classList.remove("transform-flash");
      this.highlightTimer = null;
    }, HIGHLIGHT_MS);
  }

  showConnectionError(message: string): void {
    this.el.noticeArea.textContent = `connection error: ${message}`;
    this.el.noticeArea.classList.add("visible", "connection-error");
  }

  clearConnectionError(): void {
    this.el.noticeArea.classList.remove("connection-error");
  }
}
