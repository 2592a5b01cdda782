import { ApiClient } from "./api.js";
import { SessionController } from "./controller.js";
import { render } from "./render.js";
import { setInput } from "./runTable.js";

const root = document.getElementById("app") as HTMLElement;
const api = new ApiClient((url, init) => fetch(url, init));

const controller = new SessionController(api, (state) => {
  render(root, state, handlers);
  const id = state.sessionId ?? "";
  if (location.hash.slice(1) !== id) location.hash = id;
});

const handlers = {
  onCreate: (k: number, seed: number) => void controller.createSession(k, seed),
  onOpen: (id: string) => void controller.openSession(id),
  onInput: (rowId: number, value: string) =>
    setInput(controller.state.rows, rowId, value),
  onSubmit: () => void controller.submitBatch(),
};

window.addEventListener("hashchange", () => {
  const id = location.hash.slice(1);
  if (id && id !== controller.state.sessionId) void controller.openSession(id);
});

const initial = location.hash.slice(1);
if (initial) {
  void controller.openSession(initial);
} else {
  void controller.refreshList();
}
