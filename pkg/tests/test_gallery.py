import pytest

from dsk import gallery


@pytest.mark.parametrize("name", list(gallery.EXAMPLES))
def test_example_runs_clean(name):
    rep = gallery.run_example(name)
    assert rep.checks
    failed = [c.label for c in rep.checks if not c.passed]
    assert not failed, failed
    doc = rep.to_json()
    assert doc["ok"] is True and doc["name"] == name


def test_titles_and_unknown_name():
    titles = gallery.example_titles()
    assert set(titles) == set(gallery.EXAMPLES)
    assert all(titles.values())
    with pytest.raises(KeyError):
        gallery.run_example("missing")
