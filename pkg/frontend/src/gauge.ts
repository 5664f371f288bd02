/**
 * Force gauge presentation. The value and classification always come from
 * the latest server frame; this module only maps them onto a bar fraction
 * and a band color.
 */

import { Classification } from "./protocol.js";

export const GAUGE_FULL_SCALE_N = 3.3; // device clamp; display scale only

export const BAND_COLORS: Record<Classification, string> = {
  ok: "#3fb950",
  warn: "#d4a72c",
  fail: "#f85149",
};

export interface GaugeView {
  fraction: number;       // 0..1 of the display scale
  color: string;
  label: string;          // e.g. "1.24 N"
}

export function gaugeView(forceMagnitude: number, classification: Classification,
                          fullScale: number = GAUGE_FULL_SCALE_N): GaugeView {
  const fraction = Math.min(Math.max(forceMagnitude / fullScale, 0), 1);
  return {
    fraction,
    color: BAND_COLORS[classification],
    label: `${forceMagnitude.toFixed(2)} N`,
  };
}
