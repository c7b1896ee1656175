import init, { PyramidDemo, AugmentDemo, VectorDemo } from "./pkg/lgm_web.js";

const $ = (id) => document.getElementById(id);
const COLORS = ["#d1495b", "#2e86ab", "#66a182"];

// draws RGBA bytes of a size x size image scaled to fill the canvas
function blit(canvas, rgba, size) {
  const small = new OffscreenCanvas(size, size);
  small.getContext("2d").putImageData(new ImageData(new Uint8ClampedArray(rgba), size, size), 0, 0);
  const ctx = canvas.getContext("2d");
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(small, 0, 0, canvas.width, canvas.height);
}

function pyramidView() {
  const R = 64;
  let seed = 1;
  let demo = new PyramidDemo(seed, R);
  const slider = $("pyr-levels");
  slider.max = demo.level_count();
  const draw = () => {
    demo.set_active(Number(slider.value));
    const res = 1 << (Number(slider.value) - 1);
    $("pyr-label").textContent = `${slider.value} of ${demo.level_count()} (finest ${res}x${res})`;
    blit($("pyr"), demo.rgba(), R);
  };
  slider.oninput = draw;
  $("pyr-seed").onclick = () => {
    demo.free();
    demo = new PyramidDemo(++seed, R);
    draw();
  };
  draw();
}

function augmentView() {
  const S = 48;
  let seed = 0;
  let demo = new AugmentDemo(seed, S);
  const sample = () => {
    const out = demo.sample($("aug-flip").checked, $("aug-crop").checked, $("aug-noise").checked, Number($("aug-std").value));
    blit($("aug-out"), out, S);
    $("aug-desc").textContent = demo.describe();
  };
  const load = () => {
    blit($("aug-src"), demo.source_rgba(), S);
    sample();
  };
  $("aug-go").onclick = () => {
    try {
      sample();
    } catch (e) {
      $("aug-desc").textContent = String(e);
    }
  };
  $("aug-img").onclick = () => {
    demo.free();
    demo = new AugmentDemo(++seed, S);
    load();
  };
  load();
}

function vectorView() {
  const canvas = $("vec");
  const ctx = canvas.getContext("2d");
  const scale = canvas.width / 4;
  const px = (x, y) => [canvas.width / 2 + x * scale, canvas.height / 2 - y * scale];
  let demo;
  let timer = null;
  let loss = NaN;

  const draw = () => {
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    const real = demo.real_points();
    const labels = demo.real_labels();
    for (let i = 0; i < labels.length; i++) {
      const [x, y] = px(real[2 * i], real[2 * i + 1]);
      ctx.fillStyle = COLORS[labels[i]];
      ctx.globalAlpha = 0.35;
      ctx.fillRect(x - 2, y - 2, 4, 4);
    }
    ctx.globalAlpha = 1;
    const syn = demo.points();
    for (let c = 0; c < demo.classes(); c++) {
      const [x, y] = px(syn[2 * c], syn[2 * c + 1]);
      ctx.strokeStyle = COLORS[c];
      ctx.lineWidth = 3;
      ctx.beginPath();
      ctx.arc(x, y, 8, 0, 2 * Math.PI);
      ctx.stroke();
    }
    $("vec-stats").textContent =
      `iteration ${demo.iteration()}, meta loss ${loss.toFixed(4)}, nearest-point accuracy ${(100 * demo.accuracy()).toFixed(1)}%`;
  };
  const reset = () => {
    if (demo) demo.free();
    demo = new VectorDemo(1, Number($("vec-sigma").value), 60);
    loss = NaN;
    draw();
  };
  const step = () => {
    loss = demo.step(50);
    draw();
  };
  $("vec-step").onclick = step;
  $("vec-run").onclick = () => {
    if (timer) {
      clearInterval(timer);
      timer = null;
      $("vec-run").textContent = "run";
    } else {
      timer = setInterval(step, 30);
      $("vec-run").textContent = "pause";
    }
  };
  $("vec-reset").onclick = reset;
  $("vec-sigma").onchange = reset;
  reset();
}

init()
  .then(() => {
    pyramidView();
    augmentView();
    vectorView();
  })
  .catch((e) => {
    $("error").textContent = `failed to load the wasm module: ${e}`;
  });
