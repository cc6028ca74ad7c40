import { SessionApi } from "./api.js";
import { GameController } from "./controller.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("service") ?? "";
const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

const controller = new GameController(new SessionApi(baseUrl), root);
controller.render();
