"""Shared record of acceptance verdicts, printed at the end of the session."""

NAMES = ("A1", "A2", "A3", "A4", "A5", "A6")

# name -> (passed, detail) from the acceptance module
VERDICTS: dict = {}

# name -> list of outcomes of other tests tagged with ``criterion(name)``
TAGGED: dict = {}


def record(name: str, passed: bool, detail: str) -> str:
    VERDICTS[name] = (bool(passed), detail)
    line = format_line(name)
    print(line)
    return line


def format_line(name: str) -> str:
    tagged = TAGGED.get(name, [])
    parts = []
    if name in VERDICTS:
        ok, detail = VERDICTS[name]
        parts.append(detail)
    else:
        ok = None
        if tagged:
            parts.append("acceptance check not run")
    if tagged:
        n_ok = sum(tagged)
        parts.append(f"tagged tests {n_ok}/{len(tagged)} passed")
        ok = (ok is not False) and n_ok == len(tagged)
    if ok is None:
        return f"{name} NOT RUN"
    return f"{name} {'PASS' if ok else 'FAIL'}: " + "; ".join(parts)
