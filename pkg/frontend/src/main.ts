/** Browser entry point: configuration comes from the query string.
 *
 *   index.html?server=http://localhost:8731&lang=en&annotator=ann-1
 */

import { AnnotationClient } from "./api.js";
import { AnnotationApp } from "./app.js";
import { renderMessage } from "./render.js";

function boot(): void {
  const root = document.getElementById("app");
  if (!root) {
    return;
  }
  const params = new URLSearchParams(window.location.search);
  const server = params.get("server") ?? "";
  const lang = params.get("lang") ?? "";
  const annotator = params.get("annotator") ?? "";
  if (!lang || !annotator) {
    renderMessage(
      root,
      "error",
      "missing query parameters: ?server=…&lang=…&annotator=… are required",
    );
    return;
  }
  const client = new AnnotationClient(server);
  const app = new AnnotationApp(root, client, { lang, annotator });
  void app.start();
}

boot();
