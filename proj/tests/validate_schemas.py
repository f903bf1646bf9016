"""Validates bundled scenarios, fresh traces and a sweep report against docs/*.schema.json."""

import glob
import json
import os
import subprocess
import sys
import tempfile

import jsonschema


def main():
    cli, root = sys.argv[1], sys.argv[2]

    def schema(name):
        with open(os.path.join(root, "docs", name)) as f:
            return json.load(f)

    scenarios = sorted(glob.glob(os.path.join(root, "scenarios", "*.json")))
    for path in scenarios:
        with open(path) as f:
            jsonschema.validate(json.load(f), schema("scenario.schema.json"))

    event = jsonschema.Draft202012Validator(schema("trace-event.schema.json"))
    lines = 0
    with tempfile.TemporaryDirectory() as work:
        for path in scenarios:
            for mode in ("individual", "multicast"):
                trace = os.path.join(work, "t.jsonl")
                subprocess.run([cli, "run", "--scenario", path, "--mode", mode, "--loss", "0.2", "--trace", trace],
                               check=True, stdout=subprocess.DEVNULL)
                with open(trace) as f:
                    for line in f:
                        event.validate(json.loads(line))
                        lines += 1
        report = os.path.join(work, "report.json")
        subprocess.run([cli, "sweep", "--scenario", scenarios[0], "--runs", "3", "--report", report], check=True,
                       stdout=subprocess.DEVNULL)
        with open(report) as f:
            jsonschema.validate(json.load(f), schema("report.schema.json"))
    print(f"{len(scenarios)} scenarios, {lines} trace lines and one report validated")


if __name__ == "__main__":
    main()
