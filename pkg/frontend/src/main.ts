import { ApiClient } from "./api.js";
import { createApp } from "./app.js";
import { performanceClock } from "./clock.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

// Same-origin service; the page is mounted under /app by the server.
const app = createApp(root, new ApiClient(""), performanceClock);
void app.start();
window.setInterval(() => app.tick(), 250);
