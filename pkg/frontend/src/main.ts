import { ApiClient } from "./api.js";
import { AppController, SuggestionView } from "./app.js";
import { KeyboardRenderer, keyAt } from "./keyboard.js";
import { pixelToUnit } from "./trace.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const canvas = el<HTMLCanvasElement>("keyboard");
  const chips = el<HTMLDivElement>("suggestions");
  const buffer = el<HTMLDivElement>("composition");
  const status = el<HTMLDivElement>("status");
  const toggle = el<HTMLButtonElement>("task-toggle");

  const view: SuggestionView = {
    showSuggestions(words, highlighted) {
      chips.innerHTML = "";
      words.forEach((word, i) => {
        const chip = document.createElement("button");
        chip.className = "chip" + (i === highlighted ? " highlighted" : "");
        chip.textContent = word;
        chip.addEventListener("click", () => controller.commit(i));
        chips.appendChild(chip);
      });
    },
    showComposition(text) {
      buffer.textContent = text;
    },
    showError(message) {
      status.textContent = message;
      const retry = document.createElement("button");
      retry.textContent = "retry";
      retry.addEventListener("click", () => {
        status.textContent = "";
        void boot();
      });
      status.appendChild(retry);
    },
  };

  const api = new ApiClient("");
  const controller = new AppController(api, view);

  let doc;
  try {
    const health = await api.health();
    if (health.task) controller.task = health.task;
    doc = await controller.loadLayout(health.layouts.includes("qwerty_en") ? "qwerty_en" : health.layouts[0]);
  } catch (err) {
    view.showError(`service unavailable: ${(err as Error).message} `);
    return;
  }

  const renderer = new KeyboardRenderer(canvas, doc);
  const resize = () => {
    canvas.width = canvas.clientWidth;
    canvas.height = canvas.clientWidth * doc.aspect;
    renderer.draw();
  };
  window.addEventListener("resize", resize);
  resize();

  toggle.textContent = controller.task;
  toggle.addEventListener("click", () => {
    toggle.textContent = controller.toggleTask();
  });

  let strokePixels: [number, number][] = [];
  canvas.addEventListener("pointerdown", (ev) => {
    canvas.setPointerCapture(ev.pointerId);
    strokePixels = [[ev.offsetX, ev.offsetY]];
    controller.pointerDown(ev.offsetX, ev.offsetY);
    const [ux, uy] = pixelToUnit(renderer.rect, ev.offsetX, ev.offsetY);
    renderer.highlighted = keyAt(doc, ux, uy)?.char ?? null;
    renderer.draw(strokePixels);
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (!controller.recorder.isActive) return;
    strokePixels.push([ev.offsetX, ev.offsetY]);
    controller.pointerMove(ev.offsetX, ev.offsetY);
    renderer.draw(strokePixels);
  });
  canvas.addEventListener("pointerup", async () => {
    renderer.highlighted = null;
    const rect = renderer.rect;
    strokePixels = [];
    renderer.draw();
    try {
      await controller.pointerUp(rect);
    } catch (err) {
      status.textContent = `decode failed: ${(err as Error).message}`;
    }
  });
}

void boot();
