"""Every acceptance criterion at its stated tolerance, one printed line each."""
import pytest

from minkhyp.acceptance import CRITERIA, TITLES, run_all, write_ledger


@pytest.mark.parametrize("cid", sorted(CRITERIA), ids=[f"criterion_{k}" for k in sorted(CRITERIA)])
def test_criterion(cid):
    res = CRITERIA[cid]()
    print("\n" + res.line() + (f" error={res.error}" if res.error else ""))
    assert res.passed, res.line() + " " + res.error


def test_full_ledger(tmp_path):
    # criterion 11: the ledger of 1-10 (solver runs are cached from above)
    results = run_all()
    for r in results:
        print(r.line())
    write_ledger(results, tmp_path / "ledger.json")
    import json

    led = json.loads((tmp_path / "ledger.json").read_text())
    ok = len(led["criteria"]) == len(TITLES) == 10 and led["passed"]
    print(f"[{'PASS' if ok else 'FAIL'}] criterion 11 full ledger ({len(led['criteria'])} criteria)")
    assert ok
