/**
 * Browser entry point: wires the socket client, state store, renderer,
 * probe input, gauge, CT panel, popups, and the questionnaire form.
 * The gateway address comes from the `gateway` query parameter.
 */

import { GatewayClient } from "./client.js";
import { clampSliceIndex, panelVisible } from "./ct.js";
import { gaugeView } from "./gauge.js";
import { parseObj } from "./mesh.js";
import { ProbeInput } from "./probe.js";
import { TrainerRenderer } from "./renderer.js";
import { TrainerStore } from "./store.js";

const PROBE_RATE_HZ = 60;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const gateway = params.get("gateway") ?? "ws://127.0.0.1:8765";

  const canvas = el<HTMLCanvasElement>("scene");
  const renderer = new TrainerRenderer(canvas);
  const store = new TrainerStore();
  const client = new GatewayClient({
    url: gateway,
    store,
    socketFactory: (url) => new WebSocket(url),
  });

  const mesh = parseObj(await (await fetch("liver.obj")).text());
  renderer.setTopology(mesh.triangles, mesh.positions.length / 3);

  const probe = new ProbeInput(renderer.cameraBasis(), 240);
  let pointerActive = false;
  let sessionClockS = 0;

  canvas.addEventListener("pointerdown", (ev) => {
    pointerActive = true;
    canvas.setPointerCapture(ev.pointerId);
  });
  canvas.addEventListener("pointerup", () => {
    pointerActive = false;
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (!pointerActive) return;
    const rect = canvas.getBoundingClientRect();
    const ndcX = ((ev.clientX - rect.left) / rect.width) * 2 - 1;
    const ndcY = -(((ev.clientY - rect.top) / rect.height) * 2 - 1);
    probe.movePointer(ndcX, ndcY);
  });
  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    probe.scroll(Math.sign(ev.deltaY));
    el<HTMLDivElement>("depth").textContent = `depth ${probe.currentDepth.toFixed(0)} mm`;
  }, { passive: false });

  // probe loop: display-rate sampling with idle suppression
  setInterval(() => {
    if (!client.probingAllowed || !pointerActive) return;
    sessionClockS += 1 / PROBE_RATE_HZ;
    const sample = probe.sample(sessionClockS);
    if (sample) client.probe(sample.t, sample.pos);
  }, 1000 / PROBE_RATE_HZ);

  el<HTMLButtonElement>("start").addEventListener("click", () => {
    sessionClockS = 0;
    client.start(Number(el<HTMLInputElement>("seed").value) || 42, {
      require_calibration: false,
    });
  });
  el<HTMLButtonElement>("advance").addEventListener("click", () => client.advance());
  el<HTMLButtonElement>("dismiss").addEventListener("click", () => {
    store.dismissPopup();
  });

  const slider = el<HTMLInputElement>("ct-slider");
  slider.addEventListener("input", () => {
    const index = clampSliceIndex(Number(slider.value), store.ctSliceCount);
    client.ctSelect(index);
  });

  el<HTMLButtonElement>("submit-answer").addEventListener("click", () => {
    const choice = Number(
      (document.querySelector("input[name=choice]:checked") as HTMLInputElement)?.value,
    );
    const elapsed = store.questionElapsedS(Date.now());
    client.answer(Number.isInteger(choice) ? choice : null, elapsed);
  });

  function paint(): void {
    // scene
    if (store.vertices) renderer.setVertices(store.vertices);
    if (store.latestFrame?.proxy) {
      renderer.setProbe(store.latestFrame.proxy.position);
    }
    renderer.setSectionPlane(store.ctPlane);
    renderer.render();

    // hud
    el<HTMLDivElement>("phase").textContent = store.header;
    const view = gaugeView(store.gaugeForce, store.classification);
    const bar = el<HTMLDivElement>("gauge-bar");
    bar.style.width = `${view.fraction * 100}%`;
    bar.style.background = view.color;
    el<HTMLDivElement>("gauge-label").textContent = view.label;

    const banner = el<HTMLDivElement>("banner");
    banner.hidden = store.connection === "open";
    banner.textContent = store.connection === "open" ? "" : `connection: ${store.connection}`;

    const popup = el<HTMLDivElement>("popup");
    popup.hidden = !store.popupVisible();
    if (store.popup) {
      el<HTMLDivElement>("popup-text").textContent =
        store.popup.kind === "warning"
          ? "Careful: palpation force is approaching the damage threshold"
          : store.popup.kind === "failed"
            ? "Scenario failed: the tissue may have been damaged"
            : "Another trainee is connected to this station";
    }

    // questionnaire
    const form = el<HTMLDivElement>("questionnaire");
    form.hidden = store.question === null;
    if (store.question) {
      el<HTMLDivElement>("prompt").textContent = store.question.prompt;
      el<HTMLDivElement>("timer").textContent =
        `${store.questionElapsedS(Date.now()).toFixed(1)} s`;
      const choices = el<HTMLDivElement>("choices");
      if (choices.childElementCount !== store.question.choices.length) {
        choices.innerHTML = store.question.choices
          .map((choice, i) =>
            `<label><input type="radio" name="choice" value="${i}"> ${choice}</label>`)
          .join("<br>");
      }
    }

    // ct panel
    const panel = el<HTMLDivElement>("ct-panel");
    panel.hidden = !panelVisible(store.ctSliceCount);
    if (store.ctSliceCount > 0) {
      slider.max = String(store.ctSliceCount - 1);
      el<HTMLDivElement>("ct-label").textContent =
        `slice ${store.ctSlice + 1} / ${store.ctSliceCount}`;
    }

    requestAnimationFrame(paint);
  }

  client.connect();
  requestAnimationFrame(paint);

  window.addEventListener("resize", () => {
    renderer.resize(canvas.clientWidth, canvas.clientHeight);
  });
  renderer.resize(canvas.clientWidth, canvas.clientHeight);
}

boot().catch((err) => {
  console.error(err);
  document.body.insertAdjacentText("beforeend", String(err));
});
