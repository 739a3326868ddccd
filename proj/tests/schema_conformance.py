# Copyright 2026 The vqastate Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Checks shipped documents, CLI output and live route bodies against schemas/.

Usage: schema_conformance.py <vqastate binary> <repo root>
"""

import base64
import json
import socket
import subprocess
import sys
import tempfile
import time
import urllib.error
import urllib.request
from pathlib import Path

import jsonschema
from referencing import Registry, Resource

BINARY = sys.argv[1]
ROOT = Path(sys.argv[2])
SCHEMAS = ROOT / "schemas"
DATA = ROOT / "data"

failures = []


def load(path):
    return json.loads(Path(path).read_text())


registry = Registry()
for p in sorted(SCHEMAS.glob("*.schema.json")):
    doc = load(p)
    jsonschema.Draft202012Validator.check_schema(doc)
    registry = registry.with_resource(p.name, Resource.from_contents(doc))


def check(what, instance, schema_name, definition=None):
    ref = schema_name + ("#/$defs/" + definition if definition else "")
    v = jsonschema.Draft202012Validator({"$ref": ref}, registry=registry)
    errors = sorted(v.iter_errors(instance), key=lambda e: list(e.path))
    if errors:
        e = errors[0]
        failures.append(f"{what}: {e.message} at {list(e.path)}")


def cli(*args):
    out = subprocess.run([BINARY, *args], capture_output=True, text=True)
    return out.returncode, out.stdout


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def http(method, url, body=None, raw=None):
    data = raw.encode() if raw is not None else (
        json.dumps(body).encode() if body is not None else None)
    req = urllib.request.Request(url, data=data, method=method,
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=10) as r:
            return r.status, json.loads(r.read() or b"null")
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read() or b"null")


def wait_ready(url):
    for _ in range(100):
        try:
            urllib.request.urlopen(url, timeout=1)
            return
        except urllib.error.HTTPError:
            return
        except OSError:
            time.sleep(0.05)
    raise RuntimeError("server did not come up: " + url)


def start(*args):
    port = free_port()
    proc = subprocess.Popen([BINARY, *args, "--listen", f"127.0.0.1:{port}"],
                            stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    url = f"http://127.0.0.1:{port}"
    wait_ready(url + "/")
    return proc, url


# Shipped files.
for p in sorted((DATA / "specs").glob("*.json")):
    check(str(p.relative_to(ROOT)), load(p), "spec.schema.json")
for p in sorted((DATA / "mock").glob("*.json")):
    check(str(p.relative_to(ROOT)), load(p), "mock_rules.schema.json")
check("data/corpus/manifest.json", load(DATA / "corpus/manifest.json"),
      "manifest.schema.json")

# CLI documents.
spec = str(DATA / "specs/door.json")
image = str(DATA / "corpus/door_open_1.png")
for rules, label in [("door_cells", "door=positive"), ("gibberish", "")]:
    code, out = cli("recognize", "--spec", spec, "--image", image, "--mock",
                    str(DATA / f"mock/{rules}.json"), "--mock-label", label,
                    "--json")
    check(f"recognize --json ({rules})", json.loads(out),
          "recognition.schema.json")
code, out = cli("evaluate", "--corpus", str(DATA / "corpus/manifest.json"),
                "--specs", str(DATA / "specs"), "--mock",
                str(DATA / "mock/door_cells.json"), "--json")
check("evaluate --json", json.loads(out), "report.schema.json")
code, out = cli("evaluate", "--corpus", str(DATA / "corpus/manifest.json"),
                "--specs", str(DATA / "specs"), "--mock",
                str(DATA / "mock/door_cells.json"), "--pair", "door,display",
                "--json")
check("evaluate --pair --json", json.loads(out), "joint_report.schema.json")

# Wire contract against the mock answer server.
wire = load(DATA / "wire/answer_cases.json")
with tempfile.TemporaryDirectory() as tmp:
    both = load(DATA / "mock/door_perfect.json")
    both["rules"].append({"kind": "caption",
                          "distribution": {"a door in a hallway": 1.0}})
    both_path = Path(tmp) / "both.json"
    both_path.write_text(json.dumps(both))
    servers = {
        "caption": start("mock-serve", "--rules", str(both_path), "--label",
                         "door=positive"),
        "-caption": start("mock-serve", "--rules",
                          str(DATA / "mock/vqa_only.json")),
    }
    try:
        for case in wire["cases"]:
            url = servers[case.get("capability", "caption")][1] + "/v1/answer"
            body = case.get("body")
            if body is not None:
                body = {k: (wire["image_b64"] if v == "$IMAGE" else v)
                        for k, v in body.items()}
                if case["status"] == 200:
                    check(f"wire request '{case['name']}'", body,
                          "answer_request.schema.json")
            status, reply = http("POST", url, body=body, raw=case.get("raw"))
            if status != case["status"]:
                failures.append(f"wire '{case['name']}': status {status}, "
                                f"want {case['status']}")
            elif status == 200:
                check(f"wire reply '{case['name']}'", reply,
                      "answer_response.schema.json")

        # Service routes, backed over HTTP by the mock server.
        svc, base = start("serve", "--specs", str(DATA / "specs"),
                          "--backend", servers["caption"][1], "--samples", "2")
        try:
            img = base64.b64encode(Path(image).read_bytes()).decode()
            api = "api.schema.json"
            req = {"spec_id": "door", "image_b64": img}
            check("recognize request", req, api, "recognize_request")
            routes = [
                ("POST", "/v1/recognize", req, "recognize_response"),
                ("GET", "/v1/specs", None, "spec_list"),
                ("GET", "/v1/specs/door", None, "spec"),
                ("PUT", "/v1/specs/gate",
                 {"concept_wordings": ["gate"], "positive_expression": "open",
                  "negative_expression": "closed"}, "spec"),
                ("DELETE", "/v1/specs/gate", None, "spec_deleted"),
                ("POST", "/v1/caption", {"image_b64": img}, "caption_response"),
            ]
            for method, path, body, definition in routes:
                status, reply = http(method, base + path, body=body)
                if not 200 <= status < 300:
                    failures.append(f"{method} {path}: status {status}")
                    continue
                check(f"{method} {path}", reply, api, definition)

            ev = {"corpus_ref": str(DATA / "corpus/manifest.json"),
                  "spec_ids": ["door"]}
            check("evaluate request", ev, api, "evaluate_request")
            status, reply = http("POST", base + "/v1/evaluate", body=ev)
            check("POST /v1/evaluate", reply, api, "evaluate_accepted")
            report_url = base + "/v1/reports/" + reply["report_id"]
            for _ in range(400):
                status, reply = http("GET", report_url)
                if status != 202:
                    break
                check("GET /v1/reports (pending)", reply, api, "report_pending")
                time.sleep(0.05)
            if status != 200:
                failures.append(f"GET /v1/reports: status {status}")
            else:
                check("GET /v1/reports", reply, api, "report")
            status, reply = http("GET", base + "/v1/history")
            check("GET /v1/history", reply, api, "history")
            if status == 200 and [h["seq"] for h in reply["history"]] != list(
                    range(1, len(reply["history"]) + 1)):
                failures.append("history seq numbers are not 1..n")
        finally:
            svc.terminate()
            svc.wait(timeout=10)
    finally:
        for proc, _ in servers.values():
            proc.terminate()
            proc.wait(timeout=10)

for f in failures:
    print("FAIL", f)
print(f"{len(failures)} schema failures")
sys.exit(1 if failures else 0)
