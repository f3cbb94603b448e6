//! Standalone matplotlib scripts written next to the figure CSVs. The CLI
//! never runs them.

/// What one figure script draws.
#[derive(Debug, Clone, Copy)]
pub struct PlotSpec<'a> {
    /// CSV file name, resolved relative to the script's directory.
    pub csv: &'a str,
    pub image: &'a str,
    pub xlabel: &'a str,
    pub ylabel: &'a str,
    /// One curve per (experiment, source, user) from `rate`; otherwise one
    /// curve per (experiment, source) from `sum_rate`.
    pub per_user: bool,
}

fn py_str(s: &str) -> String {
    format!("{s:?}")
}

pub fn plot_script(spec: &PlotSpec<'_>) -> String {
    let per_user = if spec.per_user { "True" } else { "False" };
    format!(
        r#"#!/usr/bin/env python3
import csv
import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
CSV = os.path.join(HERE, {csv})
IMAGE = os.path.join(HERE, {image})
PER_USER = {per_user}

curves = defaultdict(dict)
with open(CSV, newline="") as f:
    for row in csv.DictReader(f):
        if PER_USER:
            key = (row["experiment"], row["source"], "MU({{}},{{}})".format(row["cluster"], row["user"]))
            value = float(row["rate"])
        else:
            key = (row["experiment"], row["source"], "")
            value = float(row["sum_rate"])
        curves[key][float(row["sweep_value"])] = value

fig, ax = plt.subplots(figsize=(6.4, 4.8))
for (experiment, source, user), points in sorted(curves.items()):
    xs = sorted(points)
    style = "-" if source != "monte-carlo" else "o"
    label = " ".join(part for part in (experiment, user, source) if part)
    ax.plot(xs, [points[x] for x in xs], style, label=label, markerfacecolor="none")
ax.set_xlabel({xlabel})
ax.set_ylabel({ylabel})
ax.grid(True, alpha=0.3)
ax.legend(fontsize="small")
fig.tight_layout()
fig.savefig(IMAGE, dpi=150)
"#,
        csv = py_str(spec.csv),
        image = py_str(spec.image),
        xlabel = py_str(spec.xlabel),
        ylabel = py_str(spec.ylabel),
    )
}
