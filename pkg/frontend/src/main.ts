import { ConsoleApi } from "./api.js";
import { ConsoleUi } from "./ui.js";

const base = new URLSearchParams(window.location.search).get("api") ?? "";
const ui = new ConsoleUi(new ConsoleApi(base), document);
ui.mount();

declare global {
  interface Window {
    console_ui: ConsoleUi;
  }
}
window.console_ui = ui;
