/** SVG scatter/line rendering with pointer-driven lasso support. */

import type { Point } from "./geometry.js";
import type { CorrViewModel, LineSeries, ScatterPoints } from "./views.js";

const W = 520;
const H = 420;
const M = { left: 45, right: 15, top: 25, bottom: 35 };
const SVG_NS = "http://www.w3.org/2000/svg";

interface Frame {
  xmin: number;
  xmax: number;
  ymin: number;
  ymax: number;
}

function frameFor(points: readonly (readonly [number, number])[], extra = 0): Frame {
  let xmin = -extra, xmax = extra, ymin = -extra, ymax = extra;
  for (const [x, y] of points) {
    xmin = Math.min(xmin, x);
    xmax = Math.max(xmax, x);
    ymin = Math.min(ymin, y);
    ymax = Math.max(ymax, y);
  }
  const padX = 0.08 * (xmax - xmin || 1);
  const padY = 0.08 * (ymax - ymin || 1);
  return { xmin: xmin - padX, xmax: xmax + padX, ymin: ymin - padY, ymax: ymax + padY };
}

function px(fr: Frame, x: number): number {
  return M.left + ((x - fr.xmin) / (fr.xmax - fr.xmin)) * (W - M.left - M.right);
}

function py(fr: Frame, y: number): number {
  return H - M.bottom - ((y - fr.ymin) / (fr.ymax - fr.ymin)) * (H - M.top - M.bottom);
}

function el<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number>,
  text?: string,
): SVGElementTagNameMap[K] {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, String(v));
  if (text !== undefined) node.textContent = text;
  return node;
}

function svgRoot(title: string): SVGSVGElement {
  const svg = el("svg", { width: W, height: H, viewBox: `0 0 ${W} ${H}` });
  svg.style.fontFamily = "sans-serif";
  svg.style.fontSize = "11px";
  svg.appendChild(el("rect", { width: W, height: H, fill: "white" }));
  svg.appendChild(el("text", { x: W / 2, y: 16, "text-anchor": "middle", "font-size": 13 }, title));
  return svg;
}

function axes(svg: SVGSVGElement, fr: Frame): void {
  svg.appendChild(el("line", {
    x1: M.left, y1: H - M.bottom, x2: W - M.right, y2: H - M.bottom, stroke: "black",
  }));
  svg.appendChild(el("line", {
    x1: M.left, y1: H - M.bottom, x2: M.left, y2: M.top, stroke: "black",
  }));
  if (fr.xmin < 0 && fr.xmax > 0) {
    svg.appendChild(el("line", {
      x1: px(fr, 0), y1: py(fr, fr.ymin), x2: px(fr, 0), y2: py(fr, fr.ymax), stroke: "#ddd",
    }));
  }
  if (fr.ymin < 0 && fr.ymax > 0) {
    svg.appendChild(el("line", {
      x1: px(fr, fr.xmin), y1: py(fr, 0), x2: px(fr, fr.xmax), y2: py(fr, 0), stroke: "#ddd",
    }));
  }
}

export interface ScatterOptions {
  title: string;
  colors?: Map<string, string>;
  defaultColor?: string;
  rings?: number[];
  sectorBoundaries?: number[] | null;
  onLasso?: (polygon: Point[]) => void;
}

export interface RenderedScatter {
  svg: SVGSVGElement;
  /** Map plot coordinates back from a pointer event. */
  toData: (clientX: number, clientY: number) => Point;
}

export function renderScatter(series: ScatterPoints[], opts: ScatterOptions): RenderedScatter {
  const all = series.flatMap((s) => s.points);
  const fr = frameFor(all, opts.rings ? Math.max(...opts.rings) : 0);
  const svg = svgRoot(opts.title);
  axes(svg, fr);
  for (const r of opts.rings ?? []) {
    svg.appendChild(el("ellipse", {
      cx: px(fr, 0), cy: py(fr, 0),
      rx: Math.abs(px(fr, r) - px(fr, 0)), ry: Math.abs(py(fr, r) - py(fr, 0)),
      fill: "none", stroke: "#999",
    }));
  }
  for (const ang of opts.sectorBoundaries ?? []) {
    const r = Math.max(Math.abs(fr.xmax), Math.abs(fr.xmin), Math.abs(fr.ymax), Math.abs(fr.ymin));
    svg.appendChild(el("line", {
      x1: px(fr, 0), y1: py(fr, 0),
      x2: px(fr, r * Math.cos(ang)), y2: py(fr, r * Math.sin(ang)),
      stroke: "#bbb", "stroke-dasharray": "4 3",
    }));
  }
  const palette = ["#1f77b4", "#d62728"];
  series.forEach((s, si) => {
    s.points.forEach((p, i) => {
      const label = s.labels[i] ?? "";
      const color = opts.colors?.get(label) ?? opts.defaultColor ?? palette[si % 2]!;
      svg.appendChild(el("circle", { cx: px(fr, p[0]), cy: py(fr, p[1]), r: 3, fill: color }));
      if (label) {
        svg.appendChild(el("text", {
          x: px(fr, p[0]) + 4, y: py(fr, p[1]) - 4, fill: color,
        }, label));
      }
    });
  });

  const toData = (clientX: number, clientY: number): Point => {
    const rect = svg.getBoundingClientRect();
    const xPix = ((clientX - rect.left) / rect.width) * W;
    const yPix = ((clientY - rect.top) / rect.height) * H;
    const x = fr.xmin + ((xPix - M.left) / (W - M.left - M.right)) * (fr.xmax - fr.xmin);
    const y = fr.ymin + ((H - M.bottom - yPix) / (H - M.top - M.bottom)) * (fr.ymax - fr.ymin);
    return [x, y];
  };

  if (opts.onLasso) {
    let stroke: Point[] | null = null;
    let path: SVGPathElement | null = null;
    const render = () => {
      if (!stroke) return;
      const d = stroke
        .map((p, i) => `${i === 0 ? "M" : "L"}${px(fr, p[0])},${py(fr, p[1])}`)
        .join(" ");
      path?.setAttribute("d", d);
    };
    svg.addEventListener("pointerdown", (e) => {
      stroke = [toData(e.clientX, e.clientY)];
      path = el("path", { fill: "none", stroke: "#444", "stroke-dasharray": "3 2", d: "" });
      svg.appendChild(path);
      svg.setPointerCapture(e.pointerId);
    });
    svg.addEventListener("pointermove", (e) => {
      if (!stroke) return;
      stroke.push(toData(e.clientX, e.clientY));
      render();
    });
    svg.addEventListener("pointerup", () => {
      if (stroke && stroke.length >= 3) opts.onLasso?.(stroke);
      stroke = null;
      path?.remove();
      path = null;
    });
    // leaving the frame cancels the in-progress lasso
    svg.addEventListener("pointerleave", () => {
      stroke = null;
      path?.remove();
      path = null;
    });
  }
  return { svg, toData };
}

export function renderLines(series: LineSeries[], title: string): SVGSVGElement {
  const pts = series.flatMap((s) => s.x.map((x, i) => [x, s.y[i] ?? 0] as [number, number]));
  const fr = frameFor(pts);
  const svg = svgRoot(title);
  axes(svg, fr);
  const palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
  series.forEach((s, si) => {
    const d = s.x
      .map((x, i) => `${i === 0 ? "M" : "L"}${px(fr, x)},${py(fr, s.y[i] ?? 0)}`)
      .join(" ");
    svg.appendChild(el("path", { d, fill: "none", stroke: palette[si % 4]!, "stroke-width": 1.5 }));
    svg.appendChild(el("text", {
      x: W - M.right - 120, y: M.top + 13 * si + 10, fill: palette[si % 4]!,
    }, s.label));
  });
  return svg;
}
