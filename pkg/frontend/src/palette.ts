// Template palette: buttons map one to one onto `template <id>` commands,
// built from the server's registry listing so overrides stay in sync.

import { Command, TemplateInfo } from "./protocol.js";

const HIDDEN = new Set(["times-implicit"]);

export function buildPalette(
  container: HTMLElement,
  templates: TemplateInfo[],
  send: (command: Command) => void,
): void {
  container.replaceChildren();
  for (const template of templates) {
    if (HIDDEN.has(template.id)) continue;
    const button = document.createElement("button");
    button.type = "button";
    button.className = "palette-button";
    button.dataset.templateId = template.id;
    button.textContent = template.glyphs.join("□") || template.id;
    button.title = template.id;
    button.addEventListener("click", () => {
      send({ type: "template", id: template.id });
    });
    container.append(button);
  }
}
