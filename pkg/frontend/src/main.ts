import { SessionApi } from "./api.js";
import { SessionController } from "./controller.js";
import { mount } from "./ui.js";

const params = new URLSearchParams(window.location.search);
const endpoint = params.get("endpoint") ?? "";

const controller = new SessionController(new SessionApi(endpoint));
const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
mount(root, controller);
