//! Plot script emitted next to the CSV outputs.

const SCRIPT: &str = r#"#!/usr/bin/env python3
# Plots for the CSVs in this directory. Run: python3 plot.py
# Needs pandas and matplotlib. Missing CSVs are skipped.
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

here = os.path.dirname(os.path.abspath(__file__))


def load(name):
    path = os.path.join(here, name)
    return pd.read_csv(path) if os.path.exists(path) else None


def save(fig, name):
    fig.tight_layout()
    fig.savefig(os.path.join(here, name), dpi=150)
    plt.close(fig)
    print("wrote", name)


slots = load("slots.csv")
if slots is not None:
    fig, ax = plt.subplots()
    for col, label in [("rep_legitimate", "legitimate"), ("rep_speculative", "speculative"), ("rep_malicious", "malicious")]:
        if slots[col].notna().any():
            ax.plot(slots["slot"], slots[col], label=label)
    ax.set_xlabel("time slot")
    ax.set_ylabel("average reputation")
    ax.legend()
    save(fig, "reputation.png")

    fig, ax = plt.subplots()
    ax.plot(slots["slot"], slots["mean_qocs"].rolling(100, min_periods=1).mean())
    ax.set_xlabel("time slot")
    ax.set_ylabel("average QoCS (100-slot moving average)")
    save(fig, "qocs.png")

trace = load("trace.csv")
if trace is not None and len(trace):
    per_slot = trace.groupby("slot").mean(numeric_only=True)
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    axes[0].plot(per_slot.index, per_slot["p1"].rolling(100, min_periods=1).mean(), label="raw")
    axes[0].plot(per_slot.index, per_slot["p2"].rolling(100, min_periods=1).mean(), label="result")
    axes[0].set_ylabel("payment")
    axes[1].plot(per_slot.index, per_slot["U_group"].rolling(100, min_periods=1).mean(), label="group")
    axes[1].plot(per_slot.index, per_slot["U_publisher"].rolling(100, min_periods=1).mean(), label="publisher")
    axes[1].set_ylabel("utility")
    for ax in axes:
        ax.set_xlabel("time slot")
        ax.legend()
    save(fig, "learning.png")

comparison = load("comparison.csv")
if comparison is not None:
    metrics = ["secure_pubsub_ratio", "avg_qocs_raw", "avg_qocs_result", "avg_group_utility", "avg_publisher_utility"]
    fig, axes = plt.subplots(1, len(metrics), figsize=(4 * len(metrics), 4))
    for ax, m in zip(axes, metrics):
        ax.bar(comparison["scheme"], comparison[m + "_mean"], yerr=comparison[m + "_std"].fillna(0), capsize=3)
        ax.set_title(m)
        ax.tick_params(axis="x", rotation=45)
    save(fig, "comparison.png")

sys.exit(0)
"#;

pub fn script() -> &'static str {
    SCRIPT
}
