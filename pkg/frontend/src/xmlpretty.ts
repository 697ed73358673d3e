// Small string-level XML pretty printer for the source pane.
// Token text never contains '<', and the engine escapes character data,
// so splitting on tag boundaries is safe for our canonical output.

export function prettyXml(xml: string, indent = "  "): string {
  const tokens = xml.replace(/>\s*</g, "><").split(/(?=<)|(?<=>)/g)
    .filter((t) => t.length > 0);
  const lines: string[] = [];
  let depth = 0;
  let i = 0;
  while (i < tokens.length) {
    const tok = tokens[i];
    if (tok.startsWith("</")) {
      depth -= 1;
      lines.push(indent.repeat(depth) + tok);
      i += 1;
    } else if (tok.startsWith("<") && tok.endsWith("/>")) {
      lines.push(indent.repeat(depth) + tok);
      i += 1;
    } else if (tok.startsWith("<")) {
      // leaf with text content collapses onto one line
      if (i + 2 < tokens.length && !tokens[i + 1].startsWith("<") &&
          tokens[i + 2].startsWith("</")) {
        lines.push(indent.repeat(depth) + tok + tokens[i + 1] + tokens[i + 2]);
        i += 3;
      } else {
        lines.push(indent.repeat(depth) + tok);
        depth += 1;
        i += 1;
      }
    } else {
      lines.push(indent.repeat(depth) + tok);
      i += 1;
    }
  }
  return lines.join("\n");
}
