#!/usr/bin/env python3
"""Regenerate configs/full and configs/desk.

full: N=5000 with the long ensembles. desk: N=1000, D=2000 for quick runs.
"""
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent / "configs"

FIXED = "[histogram]\ntarget = fixed_points\n"
RATIOS = (
    "[histogram]\ntarget = ratios_A\nfit_min = 1\nfit_max = 30\n\n"
    "[histogram]\ntarget = ratios_B\nfit_min = 1\nfit_max = 30\n"
)


def tag(v):
    s = f"{v:g}".replace(".", "p").replace("-", "m")
    return s


def experiments():
    for a in (0, 0.3, 0.6, 0.9):
        yield "fig1", f"alpha{tag(a)}", 40000, {"strategy": "fixed_preference", "alpha": a}, FIXED
    for a in (0, 10, 100):
        yield "fig2", f"absalpha{tag(a)}", 10000, {"strategy": "random_preference", "alpha_abs": a}, FIXED
    for d in (1e-5, 1, 1.1):
        for g in (1, 0.9, 0.7):
            yield "fig3", f"delta{tag(d)}_gamma{tag(g)}", 20000, {"strategy": "history_weighted", "gamma": g, "delta": d}, FIXED
    for a in (0, 0.3, 0.6, 0.9):
        yield "fig4", f"alpha{tag(a)}", 10000, {"strategy": "fixed_preference", "alpha": a}, RATIOS
    for a in (10, 20, 50):
        yield "fig5", f"absalpha{tag(a)}", 20000, {"strategy": "random_preference", "alpha_abs": a}, RATIOS
    for d in (1e-5, 1, 1.1):
        for g in (0.9, 0.8, 0.7):
            yield "fig6", f"delta{tag(d)}_gamma{tag(g)}", 15000, {"strategy": "history_weighted", "gamma": g, "delta": d}, RATIOS


def render(name, params, n_agents, n_days, histograms):
    lines = [f"name = {name}"]
    lines += [f"{k} = {v:g}" if isinstance(v, (int, float)) else f"{k} = {v}" for k, v in params.items()]
    lines += [f"n_agents = {n_agents}", f"n_days = {n_days}", "seed = 1", "", histograms]
    return "\n".join(lines)


def main():
    for scale, n_agents, days in (("full", 5000, None), ("desk", 1000, 2000)):
        out = ROOT / scale
        out.mkdir(parents=True, exist_ok=True)
        for old in out.glob("*.ini"):
            old.unlink()
        for fig, label, n_days, params, hist in experiments():
            name = f"{fig}_{label}"
            text = render(name, params, n_agents, days or n_days, hist)
            (out / f"{name}.ini").write_text(text)


if __name__ == "__main__":
    main()
