"""Drives a live `vizier serve` and validates every response against the service schema."""
import json
import socket
import subprocess
import sys
import tempfile
import time
import urllib.error
import urllib.request

import jsonschema

cli, schema_path, fixtures = sys.argv[1:4]
schema = json.load(open(schema_path))


def check(name, body):
    ref = {"$ref": "#/$defs/" + name, "$defs": schema["$defs"]}
    jsonschema.validate(body, ref)


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


port = free_port()
base = f"http://127.0.0.1:{port}"


def call(method, path, body=None):
    data = None if body is None else json.dumps(body).encode()
    req = urllib.request.Request(base + path, data=data, method=method,
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req) as r:
            return r.status, json.loads(r.read())
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read())


with tempfile.TemporaryDirectory() as data:
    for name in ("lineitem.csv", "twelve.csv"):
        open(f"{data}/{name}", "w").write(open(f"{fixtures}/{name}").read())
    proc = subprocess.Popen([cli, "serve", "--port", str(port), "--data-dir", data],
                            stderr=subprocess.DEVNULL)
    try:
        for _ in range(100):
            try:
                socket.create_connection(("127.0.0.1", port), 0.1).close()
                break
            except OSError:
                time.sleep(0.05)

        ten = "LOAD 'twelve.csv';\n" + "".join(
            f"UPDATE A = 3 WHERE ROWID = {i};\n" for i in range(1, 11))
        create = {"id": "nb", "pages": [{"name": "items", "script": open(f"{fixtures}/lineitem.vizual").read()},
                                        {"name": "ten", "script": ten}]}
        check("CreateNotebookRequest", create)
        st, body = call("POST", "/notebooks", create)
        assert st == 201, body
        check("CreateNotebookResponse", body)
        check("NotebookListResponse", call("GET", "/notebooks")[1])
        check("NotebookResponse", call("GET", "/notebooks/nb")[1])

        check("WindowResponse", call("GET", "/notebooks/nb/pages/items/window?cols=0:3&rows=1:4")[1])
        check("Script", call("GET", "/notebooks/nb/pages/items/statements")[1])
        check("SqlResponse", call("GET", "/notebooks/nb/pages/items/sql")[1])

        page = {"name": "cheap", "script": "LOAD PAGE 'items'; DELETE WHERE price > 100;"}
        check("AddPageRequest", page)
        st, body = call("POST", "/notebooks/nb/pages", page)
        assert st == 201, body
        check("Script", body)

        stmts = {"text": "UPDATE discount = 0 WHERE ROWID = 1;"}
        check("StatementsRequest", stmts)
        st, body = call("POST", "/notebooks/nb/pages/items/statements", stmts)
        assert st == 200, body
        check("Script", body)

        gestures = {"gestures": [
            {"type": "edit_cell", "at": {"col": 0, "row": 0}, "text": "bolt"},
            {"type": "insert_column", "index": 1, "name": "note"},
            {"type": "sort", "keys": [{"column": "price", "descending": True}]},
            {"type": "typecast", "region": {"first": {"col": 2, "row": 0}, "last": {"col": 2, "row": 1}}, "cast": "FLOAT"},
        ]}
        check("GesturesRequest", gestures)
        st, body = call("POST", "/notebooks/nb/pages/items/gestures", gestures)
        assert st == 200, body
        check("Script", body)

        st, body = call("GET", "/notebooks/nb/pages/ten/suggestions")
        assert st == 200, body
        check("SuggestionsResponse", body)
        reroll = next(s for s in body["suggestions"] if s["kind"] == "REROLL")
        accept = {"id": reroll["id"]}
        check("AcceptSuggestionRequest", accept)
        st, body = call("POST", "/notebooks/nb/pages/ten/suggestions", accept)
        assert st == 200, body
        check("Script", body)

        branch = {"page": "items", "statements": 1, "name": "alt"}
        check("BranchRequest", branch)
        st, body = call("POST", "/notebooks/nb/branches", branch)
        assert st == 201, body
        check("BranchResponse", body)

        for method, path, payload, want in [
            ("GET", "/notebooks/missing", None, 404),
            ("POST", "/notebooks/nb/pages/items/statements", {"text": "UPDATE = ;"}, 422),
            ("POST", "/notebooks/nb/pages/ten/suggestions", accept, 409),
        ]:
            st, body = call(method, path, payload)
            assert st == want, (path, st, body)
            check("Error", body)
        print("schema ok")
    finally:
        proc.terminate()
        proc.wait()
