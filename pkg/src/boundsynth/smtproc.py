"""External solver subprocess backend.

Talks to any solver that reads the standard SMT-LIB2 text format on stdin
and answers `sat` / `unsat` / `unknown` as the first reply token (the
format the reference artifact used with Z3).  One subprocess per checker
instance; queries are separated with (reset).
"""

from __future__ import annotations

import subprocess
from typing import Optional


class SolverError(Exception):
    """Solver process failure: missing binary, crash, or malformed reply.

    Deliberately distinct from an `unknown` verdict, which is a valid
    solver answer."""


class SolverProcess:
    def __init__(self, cmd: list[str]):
        self.cmd = list(cmd)
        self.proc: Optional[subprocess.Popen] = None

    def _ensure(self) -> subprocess.Popen:
        if self.proc is None or self.proc.poll() is not None:
            try:
                self.proc = subprocess.Popen(
                    self.cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                    stderr=subprocess.DEVNULL, text=True, bufsize=1)
            except OSError as exc:
                raise SolverError(f"cannot start solver {self.cmd!r}: {exc}")
        return self.proc

    def _send(self, text: str) -> None:
        proc = self._ensure()
        try:
            assert proc.stdin is not None
            proc.stdin.write(text)
            proc.stdin.flush()
        except (OSError, ValueError) as exc:
            self.close()
            raise SolverError(f"solver pipe failure: {exc}")

    def _read_line(self) -> str:
        proc = self.proc
        assert proc is not None and proc.stdout is not None
        line = proc.stdout.readline()
        if line == "":
            self.close()
            raise SolverError("solver closed its output stream")
        return line.strip()

    def check(self, query: str) -> str:
        """Run one query; returns "sat" | "unsat" | "unknown"."""
        self._send("(reset)\n" + query)
        if "(check-sat)" not in query:
            self._send("(check-sat)\n")
        while True:
            line = self._read_line()
            if not line:
                continue
            token = line.split()[0].lstrip("(")
            if token in ("sat", "unsat", "unknown"):
                return token
            raise SolverError(f"malformed solver reply: {line!r}")

    def get_values(self, names: list[str]) -> dict[str, object]:
        """(get-value ...) for the given constants after a sat reply."""
        if not names:
            return {}
        self._send(f"(get-value ({' '.join(names)}))\n")
        text = ""
        depth = 0
        while True:
            line = self._read_line()
            text += " " + line
            depth = text.count("(") - text.count(")")
            if depth == 0 and text.strip():
                break
        return _parse_values(text)

    def close(self) -> None:
        if self.proc is not None:
            try:
                if self.proc.stdin:
                    self.proc.stdin.close()
                self.proc.terminate()
                self.proc.wait(timeout=2)
            except Exception:
                try:
                    self.proc.kill()
                except Exception:
                    pass
            self.proc = None


def _parse_values(text: str) -> dict[str, object]:
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()

    def parse(idx: int):
        if tokens[idx] == "(":
            items = []
            idx += 1
            while tokens[idx] != ")":
                item, idx = parse(idx)
                items.append(item)
            return items, idx + 1
        return tokens[idx], idx + 1

    try:
        tree, _ = parse(0)
    except IndexError:
        raise SolverError(f"malformed model reply: {text!r}")
    out: dict[str, object] = {}
    for pair in tree:
        if not isinstance(pair, list) or len(pair) != 2:
            raise SolverError(f"malformed model entry: {pair!r}")
        name, val = pair
        out[str(name)] = _parse_atom(val)
    return out


def _parse_atom(val) -> object:
    if isinstance(val, list):
        if len(val) == 2 and val[0] == "-":
            inner = _parse_atom(val[1])
            if isinstance(inner, int):
                return -inner
        raise SolverError(f"unsupported model value: {val!r}")
    if val == "true":
        return True
    if val == "false":
        return False
    try:
        return int(val)
    except ValueError:
        raise SolverError(f"unsupported model value: {val!r}")
