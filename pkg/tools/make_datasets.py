#!/usr/bin/env python3
"""Generate the bundled sample datasets and figure recipes.

Published numbers (the eight software-developer rows and a few pinned
extremes) are kept verbatim; every other value is synthesized from seeded
generators so rebuilds are byte-identical.  Output goes to the package data
tree:

    python3 tools/make_datasets.py src/micromap/data
"""

from __future__ import annotations

import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from micromap.ingest import (  # noqa: E402
    AdapterConfig,
    ColumnMapping,
    DatasetManifest,
    LongTimeSpec,
    WideTimeSpec,
    load_dataset,
    manifest_to_json,
    registry_list,
)
from micromap.maprender import load_atlas  # noqa: E402
from micromap.model import (  # noqa: E402
    ColumnSort,
    ColumnSpec,
    PlotSpec,
    RefValue,
    plot_spec_to_json,
    validate_spec,
)

# OEWS May 2023, software developers (SOC 15-1252): the eight states published
# in the source table, kept verbatim.  Columns: lq, mean, prse, p10..p90.
SOFTWARE_DEV_PUBLISHED = {
    "AL": (0.76, 53.19, 1.5, 29.58, 37.73, 49.39, 64.57, 81.29),
    "AK": (0.08, 70.01, 4.6, 41.95, 52.27, 72.79, 84.83, 93.45),
    "AZ": (1.13, 61.56, 1.6, 37.72, 45.77, 59.22, 69.85, 84.83),
    "AR": (0.41, 42.37, 4.8, 14.13, 27.96, 44.3, 53.97, 64.05),
    "CA": (1.55, 83.55, 0.8, 49.64, 65.04, 81.09, 100.92, 108.97),
    "CO": (1.47, 69.92, 1.1, 41.62, 50.73, 64.89, 80.44, 99.25),
    "CT": (1.01, 61.75, 1.5, 37.51, 47.93, 60.14, 75.69, 89.63),
    "DE": (0.95, 63.29, 2.0, 44.08, 51.97, 63.31, 73.29, 84.04),
}

QUARTERS_21 = [f"{y} Q{q}" for y in range(2020, 2025) for q in range(1, 5)] + ["2025 Q1"]
QUARTERS_12 = [f"{y} Q{q}" for y in range(2019, 2022) for q in range(1, 5)]


def write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(out.getvalue(), encoding="utf-8")


def write_dataset(root: Path, dataset_id: str, atlas: str, provenance: str,
                  adapter: AdapterConfig, files: dict[str, tuple[list[str], list[list[str]]]]) -> None:
    directory = root / "datasets" / dataset_id
    directory.mkdir(parents=True, exist_ok=True)
    for name, (header, rows) in files.items():
        write_csv(directory / name, header, rows)
    manifest = DatasetManifest(
        id=dataset_id,
        files=tuple(files.keys()),
        atlas=atlas,
        adapter=adapter,
        provenance=provenance,
        directory=directory,
    )
    text = json.dumps(manifest_to_json(manifest), indent=2) + "\n"
    (directory / "manifest.json").write_text(text, encoding="utf-8")


def write_recipe(root: Path, recipe_id: str, dataset: str, atlas: str, spec: PlotSpec) -> None:
    directory = root / "figures"
    directory.mkdir(parents=True, exist_ok=True)
    doc = {"id": recipe_id, "dataset": dataset, "atlas": atlas, "spec": plot_spec_to_json(spec)}
    (directory / f"{recipe_id}.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def comma(v: float) -> str:
    return f"{int(round(v)):,}"


def money(v: float) -> str:
    return f"{v:.2f}"


# ---------------------------------------------------------------------------
# software developers (dot + dot_ci + boxplot)

def build_software_dev(root: Path, states: list[str]) -> float:
    rng = np.random.default_rng(101)
    rows = []
    medians = []
    for st in states:
        if st in SOFTWARE_DEV_PUBLISHED:
            lq, mean, prse, p10, p25, p50, p75, p90 = SOFTWARE_DEV_PUBLISHED[st]
        else:
            p50 = rng.uniform(42.0, 82.0)
            p10 = p50 * rng.uniform(0.50, 0.65)
            p25 = p50 * rng.uniform(0.72, 0.85)
            p75 = p50 * rng.uniform(1.18, 1.38)
            p90 = p50 * rng.uniform(1.45, 1.75)
            mean = p50 * rng.uniform(1.00, 1.12)
            lq = float(np.clip(rng.lognormal(0.0, 0.35), 0.2, 2.3))
            prse = rng.uniform(0.5, 4.8)
            lq, mean, prse = round(lq, 2), round(mean, 2), round(prse, 1)
            p10, p25, p50, p75, p90 = (round(v, 2) for v in (p10, p25, p50, p75, p90))
        medians.append(p50)
        rows.append([st, f"{lq:.2f}", money(mean), f"{prse:g}",
                     money(p10), money(p25), money(p50), money(p75), money(p90)])
    header = ["ST", "LOCATION_QUOTIENT", "H_MEAN", "MEAN_PRSE",
              "H_PCT10", "H_PCT25", "H_MEDIAN", "H_PCT75", "H_PCT90"]
    adapter = AdapterConfig(
        key_column="ST",
        mappings=(
            ColumnMapping("LOCATION_QUOTIENT", "lq", "ratio"),
            ColumnMapping("H_MEAN", "wage_mean", "$/hr"),
            ColumnMapping("MEAN_PRSE", "prse", "%"),
            ColumnMapping("H_PCT10", "p10", "$/hr"),
            ColumnMapping("H_PCT25", "p25", "$/hr"),
            ColumnMapping("H_MEDIAN", "p50", "$/hr"),
            ColumnMapping("H_PCT75", "p75", "$/hr"),
            ColumnMapping("H_PCT90", "p90", "$/hr"),
        ),
        missing=("", "*", "**"),
    )
    write_dataset(
        root, "oews-software-dev", "us-states-dc",
        "State hourly wage and employment-concentration extract for software developers "
        "(SOC 15-1252), OEWS May 2023, https://www.bls.gov/oes/2023/may/oes151252.htm; "
        "eight published rows kept verbatim, the rest synthesized for demonstration.",
        adapter, {"oews_software_dev.csv": (header, rows)},
    )
    national_median = round(float(np.median(medians)), 2)
    spec = PlotSpec(
        sort=ColumnSort("lq"),
        columns=(
            ColumnSpec(
                glyph="dot",
                bindings={"value": "lq"},
                reference_values=(RefValue(1.0, "parity"),),
                title="Location quotient",
            ),
            ColumnSpec(
                glyph="dot_ci",
                bindings={"value": "wage_mean", "prse": "prse"},
                options={"level": 0.90},
                reference_values=(RefValue(66.0, "U.S. mean"),),
                title="Mean hourly wage ($)",
            ),
            ColumnSpec(
                glyph="boxplot",
                bindings={"p10": "p10", "p25": "p25", "p50": "p50", "p75": "p75", "p90": "p90"},
                reference_values=(RefValue(national_median, "U.S. median"),),
                title="Hourly wage percentiles ($)",
            ),
        ),
        title="Software developer employment and wages by state",
        subtitle="hourly wages with 90% confidence intervals",
    )
    write_recipe(root, "fig3_4", "oews-software-dev", "us-states-dc", spec)
    return national_median


# ---------------------------------------------------------------------------
# police officers (dot + two arrows + scatter; scatter with lowess)

def build_police(root: Path, states: list[str]) -> None:
    rng = np.random.default_rng(102)
    rows = []
    for st in states:
        wage = rng.uniform(23.0, 46.0)
        # concentration rises with wages, with an elbow near the national mean
        lq = 0.72 + 0.55 / (1.0 + np.exp(-(wage - 36.5) / 2.2)) + rng.normal(0.0, 0.08)
        lq = float(np.clip(lq, 0.3, 1.9))
        msa_mean = wage * rng.uniform(1.02, 1.14)
        bos_mean = wage * rng.uniform(0.84, 0.97)
        msa_lo = msa_mean * rng.uniform(0.78, 0.90)
        msa_hi = msa_mean * rng.uniform(1.10, 1.32)
        bos_lo = bos_mean * rng.uniform(0.85, 0.94)
        bos_hi = bos_mean * rng.uniform(1.06, 1.20)
        rows.append([st, money(wage), f"{lq:.2f}",
                     money(msa_lo), money(msa_hi), money(msa_mean),
                     money(bos_lo), money(bos_hi), money(bos_mean)])
    header = ["ST", "H_MEAN", "LQ", "MSA_MIN", "MSA_MAX", "MSA_MEAN",
              "BOS_MIN", "BOS_MAX", "BOS_MEAN"]
    adapter = AdapterConfig(
        key_column="ST",
        mappings=(
            ColumnMapping("H_MEAN", "wage_mean", "$/hr"),
            ColumnMapping("LQ", "lq", "ratio"),
            ColumnMapping("MSA_MIN", "msa_lo", "$/hr"),
            ColumnMapping("MSA_MAX", "msa_hi", "$/hr"),
            ColumnMapping("MSA_MEAN", "msa_mean", "$/hr"),
            ColumnMapping("BOS_MIN", "bos_lo", "$/hr"),
            ColumnMapping("BOS_MAX", "bos_hi", "$/hr"),
            ColumnMapping("BOS_MEAN", "bos_mean", "$/hr"),
        ),
        missing=("", "*"),
    )
    write_dataset(
        root, "oews-police-wages", "us-states-dc",
        "State, MSA, and balance-of-state hourly wages for police and sheriff's patrol "
        "officers (SOC 33-3051), modeled on OEWS tables at https://www.bls.gov/oes/tables.htm; "
        "values synthesized for demonstration.",
        adapter, {"oews_police.csv": (header, rows)},
    )
    national = RefValue(36.5, "U.S. mean", "dashed")
    wage_cols = (
        ColumnSpec(
            glyph="dot",
            bindings={"value": "wage_mean"},
            reference_values=(national,),
            title="State mean wage ($/hr)",
        ),
        ColumnSpec(
            glyph="arrow",
            bindings={"from": "msa_lo", "to": "msa_hi"},
            reference_values=(national,),
            title="MSA wage range ($/hr)",
        ),
        ColumnSpec(
            glyph="arrow",
            bindings={"from": "bos_lo", "to": "bos_hi"},
            reference_values=(national,),
            title="Non-MSA wage range ($/hr)",
        ),
    )
    fig2_2 = PlotSpec(
        sort=ColumnSort("wage_mean"),
        columns=wage_cols + (
            ColumnSpec(
                glyph="scatter",
                bindings={"x": "bos_mean", "y": "msa_mean"},
                title="MSA vs non-MSA mean wage",
            ),
        ),
        title="Police officer wages by state and sub-area",
        subtitle="urban (MSA) and rural wage ranges",
    )
    write_recipe(root, "fig2_2", "oews-police-wages", "us-states-dc", fig2_2)
    fig3_1 = PlotSpec(
        sort=ColumnSort("wage_mean"),
        columns=(
            ColumnSpec(
                glyph="scatter",
                bindings={"x": "wage_mean", "y": "lq"},
                options={"lowess_span": 2.0 / 3.0},
                reference_values=(RefValue(36.5, "U.S. mean"),),
                title="Concentration vs mean wage",
            ),
        ) + wage_cols,
        title="Police officer wage concentration",
        subtitle="location quotient against hourly wage",
    )
    write_recipe(root, "fig3_1", "oews-police-wages", "us-states-dc", fig3_1)


# ---------------------------------------------------------------------------
# all-industries quarterly wages (bar + timeseries + scatter), long format

def build_establishments(root: Path, states: list[str]) -> None:
    rng = np.random.default_rng(103)
    header = ["st", "quarter", "avg_wkly_wage", "estabs", "emp_chg_pct", "wage_chg_pct"]
    rows = []
    for st in states:
        estabs = float(np.exp(rng.uniform(np.log(1.1e4), np.log(1.15e6))))
        base = rng.uniform(950.0, 1750.0)
        growth = rng.uniform(0.004, 0.009)
        bump = rng.uniform(1.05, 1.10)
        wages = []
        for i, _ in enumerate(QUARTERS_21):
            seasonal = bump if i % 4 == 0 else 1.0  # Q1 bonus-season spike
            wages.append(base * (1.0 + growth) ** i * seasonal * rng.uniform(0.995, 1.005))
        wage_chg = (wages[20] - wages[16]) / wages[16] * 100.0
        emp_chg = rng.uniform(-2.5, 4.5)
        for label, w in zip(QUARTERS_21, wages):
            rows.append([st, label, money(w), comma(estabs),
                         f"{emp_chg:.2f}", f"{wage_chg:.2f}"])
    adapter = AdapterConfig(
        key_column="st",
        mappings=(
            ColumnMapping("estabs", "estabs", "count"),
            ColumnMapping("emp_chg_pct", "emp_chg", "%"),
            ColumnMapping("wage_chg_pct", "wage_chg", "%"),
        ),
        long_time=LongTimeSpec(group="wage", time_column="quarter", value_column="avg_wkly_wage"),
    )
    write_dataset(
        root, "qcew-establishments", "us-states-dc",
        "All-industries establishment counts and average weekly wages by state, "
        "2020 Q1 through 2025 Q1, modeled on QCEW data at https://data.bls.gov/cew/; "
        "values synthesized for demonstration.",
        adapter, {"qcew_all_industries.csv": (header, rows)},
    )
    spec = PlotSpec(
        sort=ColumnSort("estabs"),
        columns=(
            ColumnSpec(glyph="bar", bindings={"value": "estabs"},
                       title="Establishments, 2025 Q1"),
            ColumnSpec(glyph="timeseries", bindings={"group": "wage"},
                       title="Avg weekly wage ($)"),
            ColumnSpec(glyph="scatter", bindings={"x": "emp_chg", "y": "wage_chg"},
                       title="1-yr % change: wage vs employment"),
        ),
        title="All-industries establishments, wages, and employment by state",
        subtitle="quarterly, 2020 Q1 to 2025 Q1",
    )
    write_recipe(root, "fig1_1", "qcew-establishments", "us-states-dc", spec)


# ---------------------------------------------------------------------------
# pandemic-era employment by industry (two timeseries via over-year transform)

def build_covid_industries(root: Path, states: list[str]) -> None:
    rng = np.random.default_rng(104)
    season = [1.00, 1.04, 1.03, 1.00]
    leisure_covid = [1.0, 1.0, 1.0, 1.0, 0.97, None, 0.80, 0.82, 0.85, None, 0.97, 0.99]
    rows = []
    for st in states:
        total = float(np.exp(rng.uniform(np.log(2.2e5), np.log(1.7e7))))
        small = total < 1.2e6
        lbase = total * rng.uniform(0.08, 0.13)
        cbase = total * rng.uniform(0.035, 0.06)
        lseries = []
        crash = rng.uniform(0.52, 0.72)
        rebound = rng.uniform(0.90, 1.00)
        for i in range(12):
            mult = leisure_covid[i]
            if i == 5:
                mult = crash
            elif i == 9:
                mult = rebound
            lseries.append(lbase * season[i % 4] * mult * rng.uniform(0.99, 1.01))
        cseries = []
        cshock = rng.uniform(0.75, 1.02)
        noise = 0.10 if small else 0.03  # small states are the noisy ones
        for i in range(12):
            mult = 1.0 if i < 5 else cshock + (1.0 - cshock) * min(1.0, (i - 5) / 4.0)
            cseries.append(cbase * season[i % 4] * mult * rng.uniform(1 - noise, 1 + noise))
        rows.append([st, comma(total)]
                    + [comma(v) for v in lseries] + [comma(v) for v in cseries])
    header = ["st", "total_emp_2021q2"]
    header += [f"lh_{label.replace(' Q', '_')}" for label in QUARTERS_12]
    header += [f"con_{label.replace(' Q', '_')}" for label in QUARTERS_12]
    adapter = AdapterConfig(
        key_column="st",
        mappings=(ColumnMapping("total_emp_2021q2", "total_emp", "jobs"),),
        wide_time=(
            WideTimeSpec(group="leisure_emp", pattern=r"lh_(\d{4})_(\d)", label=r"\1 Q\2"),
            WideTimeSpec(group="construction_emp", pattern=r"con_(\d{4})_(\d)", label=r"\1 Q\2"),
        ),
    )
    write_dataset(
        root, "qcew-covid-industries", "us-states-dc",
        "Quarterly employment for leisure & hospitality (super-sector 1026) and "
        "construction (super-sector 1012) by state, 2019 Q1 through 2021 Q4, modeled "
        "on QCEW data at https://data.bls.gov/cew/; values synthesized for demonstration.",
        adapter, {"qcew_covid_industries.csv": (header, rows)},
    )
    spec = PlotSpec(
        sort=ColumnSort("total_emp"),
        columns=(
            ColumnSpec(glyph="timeseries", bindings={"group": "leisure_emp"},
                       options={"over_year_lag": 4},
                       title="Leisure & hospitality: 1-yr % change"),
            ColumnSpec(glyph="timeseries", bindings={"group": "construction_emp"},
                       options={"over_year_lag": 4},
                       title="Construction: 1-yr % change"),
        ),
        title="Over-the-year employment change by industry",
        subtitle="states ordered by total employment, 2021 Q2",
    )
    write_recipe(root, "fig2_1", "qcew-covid-industries", "us-states-dc", spec)


# ---------------------------------------------------------------------------
# New York counties (two bar columns, sort variable not displayed)

def build_ny_manufacturing(root: Path, counties: list[str]) -> None:
    rng = np.random.default_rng(105)
    rows = []
    for fips in counties:
        if fips == "36041":  # Hamilton County: smallest, with outsized declines
            pop, emp_chg, wage_chg = 5107.0, -38.2, -21.5
        else:
            pop = float(np.exp(rng.uniform(np.log(2.8e4), np.log(2.6e6))))
            emp_chg = round(float(rng.normal(-3.5, 3.0)), 1)
            wage_chg = round(float(rng.normal(4.0, 2.5)), 1)
        rows.append([fips, comma(pop), f"{emp_chg:g}", f"{wage_chg:g}"])
    header = ["area_fips", "pop_2024", "manuf_emp_chg_pct", "manuf_wage_chg_pct"]
    adapter = AdapterConfig(
        key_column="area_fips",
        mappings=(
            ColumnMapping("pop_2024", "pop", "persons"),
            ColumnMapping("manuf_emp_chg_pct", "emp_chg", "%"),
            ColumnMapping("manuf_wage_chg_pct", "wage_chg", "%"),
        ),
    )
    write_dataset(
        root, "ny-manufacturing", "ny-counties",
        "Manufacturing (super-sector 1013) one-year employment and wage change for New "
        "York counties, 2024 Q4 vs 2023 Q4, modeled on QCEW county extracts at "
        "https://data.bls.gov/cew/ with county population estimates from "
        "https://www.census.gov/data/tables/time-series/demo/popest/2020s-counties-total.html; "
        "values synthesized for demonstration.",
        adapter, {"ny_manufacturing.csv": (header, rows)},
    )
    spec = PlotSpec(
        sort=ColumnSort("pop"),
        columns=(
            ColumnSpec(glyph="bar", bindings={"value": "emp_chg"},
                       title="Manufacturing employment, 1-yr % change"),
            ColumnSpec(glyph="bar", bindings={"value": "wage_chg"},
                       title="Manufacturing avg wage, 1-yr % change"),
        ),
        title="Manufacturing employment and wage change, New York counties",
        subtitle="counties ordered by 2024 population (not shown)",
    )
    write_recipe(root, "fig2_3", "ny-manufacturing", "ny-counties", spec)


# ---------------------------------------------------------------------------
# elementary teachers (dot + two scatters, one with lowess, one with y=x)

def build_teachers(root: Path, states: list[str]) -> None:
    rng = np.random.default_rng(106)
    pinned_wage = {"WV": 24.1, "WA": 46.9, "OR": 45.7, "CA": 47.5, "NY": 47.2}
    pinned_lq = {"WV": 1.67, "WA": 0.78, "OR": 0.81}
    rows = []
    for st in states:
        wage_sp = pinned_wage.get(st, rng.uniform(24.5, 44.0))
        lq_sp = pinned_lq.get(st)
        if lq_sp is None:
            lq_sp = float(np.clip(rng.normal(1.0, 0.22), 0.45, 1.62))
        lq_gen = 0.97 + 0.10 * (lq_sp - 1.05) ** 2 + rng.normal(0.0, 0.06)
        wage_gen = wage_sp * rng.uniform(0.96, 1.04)
        rows.append([st, f"{lq_sp:.2f}", f"{lq_gen:.2f}", money(wage_sp), money(wage_gen)])
    header = ["ST", "SPED_LQ", "GENED_LQ", "SPED_H_MEAN", "GENED_H_MEAN"]
    adapter = AdapterConfig(
        key_column="ST",
        mappings=(
            ColumnMapping("SPED_LQ", "lq_special", "ratio"),
            ColumnMapping("GENED_LQ", "lq_general", "ratio"),
            ColumnMapping("SPED_H_MEAN", "wage_special", "$/hr"),
            ColumnMapping("GENED_H_MEAN", "wage_general", "$/hr"),
        ),
        missing=("", "*"),
    )
    write_dataset(
        root, "oews-teachers", "us-states-dc",
        "State employment concentration and hourly wages for elementary school teachers, "
        "general education (SOC 25-2021) vs special education (SOC 25-2056), modeled on "
        "OEWS tables at https://www.bls.gov/oes/tables.htm; values synthesized for "
        "demonstration.",
        adapter, {"oews_teachers.csv": (header, rows)},
    )
    spec = PlotSpec(
        sort=ColumnSort("lq_special"),
        columns=(
            ColumnSpec(glyph="dot", bindings={"value": "lq_special"},
                       reference_values=(RefValue(1.0, "parity"),),
                       title="Special education LQ"),
            ColumnSpec(glyph="scatter", bindings={"x": "lq_special", "y": "lq_general"},
                       options={"lowess_span": 2.0 / 3.0},
                       title="General vs special education LQ"),
            ColumnSpec(glyph="scatter", bindings={"x": "wage_special", "y": "wage_general"},
                       options={"identity_line": True},
                       title="Mean wage: general vs special ($/hr)"),
        ),
        title="Elementary teacher employment and wages",
        subtitle="general vs special education",
    )
    write_recipe(root, "fig3_3", "oews-teachers", "us-states-dc", spec)


def main() -> int:
    if len(sys.argv) != 2:
        print(__doc__, file=sys.stderr)
        return 2
    root = Path(sys.argv[1])
    atlas_dir = root / "atlases"
    us = load_atlas(atlas_dir / "us-states-dc.json")
    ny = load_atlas(atlas_dir / "ny-counties.json")
    states = sorted(us.ids())
    counties = sorted(ny.ids())

    build_software_dev(root, states)
    build_police(root, states)
    build_establishments(root, states)
    build_covid_industries(root, states)
    build_ny_manufacturing(root, counties)
    build_teachers(root, states)

    # sanity: every manifest loads, every recipe validates against its dataset
    manifests = {m.id: m for m in registry_list(root / "datasets")}
    bad = [m.id for m in manifests.values() if m.error]
    if bad:
        print(f"manifest errors: {bad}", file=sys.stderr)
        return 1
    from micromap.model import plot_spec_from_json

    for recipe_path in sorted((root / "figures").glob("*.json")):
        doc = json.loads(recipe_path.read_text(encoding="utf-8"))
        table = load_dataset(manifests[doc["dataset"]])
        atlas = load_atlas(atlas_dir / f"{doc['atlas']}.json")
        report = validate_spec(plot_spec_from_json(doc["spec"]), table, atlas)
        status = "ok" if report.ok() else f"ISSUES: {report.issues}"
        print(f"{recipe_path.stem}: {doc['dataset']} ({len(table.keys)} rows) {status}")
        if not report.ok():
            return 1
    print(f"{len(manifests)} datasets, {len(list((root / 'figures').glob('*.json')))} recipes")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
