#!/usr/bin/env python3
"""Regenerate the simulated-validation fixture worlds under fixtures/worlds/.

Each world is a directory with:
  world.json      ground truth for the simulated validator
  registry/*.json per-package metadata documents (the /pypi/<name>/json shape)
  *.py            the broken snippet(s) the world repairs

Run from the repository root:  python3 tools/gen_fixture_worlds.py
"""

import json
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "fixtures" / "worlds"


def registry_doc(name: str, releases: list) -> dict:
    """releases: list of (version, iso_date, requires_python_or_None)."""
    out = {"info": {"name": name}, "releases": {}}
    for version, date, requires in releases:
        entry = {"upload_time_iso_8601": f"{date}T00:00:00Z", "yanked": False}
        if requires:
            entry["requires_python"] = requires
        out["releases"][version] = [entry]
    return out


def write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def gen_listing() -> None:
    d = ROOT / "listing"
    write_json(d / "registry" / "keras.json", registry_doc("keras", [
        ("1.0.0", "2016-05-15", None),
        ("2.0.8", "2017-08-25", None),
        ("2.0.9", "2017-11-01", None),
        ("2.1.5", "2018-03-06", None),
    ]))
    write_json(d / "registry" / "tensorflow.json", registry_doc("tensorflow", [
        ("0.12.0", "2016-12-19", None),
        ("2.2.0", "2020-05-05", ">=3.6"),
        ("2.3.0", "2020-07-27", ">=3.6"),
        ("2.4.4", "2021-11-01", ">=3.6"),
        ("2.7.0", "2021-12-30", ">=3.7"),
    ]))
    world = {
        "interpreters": ["2.7", "3.4", "3.5", "3.6", "3.7"],
        "installable": {
            "2.7": {"keras": ["1.0.0"], "tensorflow": ["0.12.0"]},
            "3.5": {"keras": ["2.0.8", "2.0.9", "2.1.5"]},
            "3.6": {"keras": ["2.0.8", "2.0.9", "2.1.5"],
                    "tensorflow": ["2.2.0", "2.3.0", "2.4.4"]},
            "3.7": {"keras": ["2.1.5"],
                    "tensorflow": ["2.2.0", "2.3.0", "2.4.4", "2.7.0"]},
        },
        "expected": {"3.6": {"keras": "2.0.9", "tensorflow": "2.4.4"}},
        "syntax_error_on": ["2.7"],
    }
    write_json(d / "world.json", world)
    (d / "snippet.py").write_text(
        "import keras\n"
        "import tensorflow as tf\n"
        "\n"
        "model = keras.models.Sequential()\n"
        "print(tf.__version__)\n")


def gen_corpus20() -> None:
    d = ROOT / "corpus20"
    interps = ["2.7", "3.5", "3.6", "3.7"]
    installable = {i: {} for i in interps}
    expected36 = {}

    def add_module(name: str, versions: list, working: str | None) -> None:
        releases = []
        for k, v in enumerate(versions):
            month = (k % 12) + 1
            year = 2019 + k // 12
            releases.append((v, f"{year}-{month:02d}-15", None))
        write_json(d / "registry" / f"{name}.json", registry_doc(name, releases))
        for i in interps:
            installable[i][name] = ["*"]
        if working is not None:
            expected36[name] = working

    # twelve solvable modules with small catalogs (worst case stays inside the budget)
    solvable_versions = ["1.0", "1.1", "1.2", "1.3"]
    for n in range(1, 13):
        add_module(f"mod{n:02d}", solvable_versions, solvable_versions[n % 4])
    # eight unsolvable modules with deep catalogs (never run clean)
    deep = [f"2.{k}" for k in range(15)]
    for n in range(13, 21):
        add_module(f"mod{n:02d}", deep, None)

    world = {
        "interpreters": interps,
        "installable": installable,
        "expected": {"3.6": expected36},
        "transitive": {"mod05": ["mod06"]},
        "syntax_error_on": ["2.7"],
    }
    write_json(d / "world.json", world)

    files = d / "files"
    files.mkdir(parents=True, exist_ok=True)
    for n in range(1, 21):
        body = "import os\nimport sys\n"
        body += f"import mod{n:02d}\n"
        if n == 10:
            body += "import mod11\n"
        if n == 11:
            body += "import mod12\n"
        body += f"\nprint(mod{n:02d})\n"
        (files / f"file{n:02d}.py").write_text(body)


def main() -> None:
    gen_listing()
    gen_corpus20()
    print(f"worlds written under {ROOT}")


if __name__ == "__main__":
    main()
