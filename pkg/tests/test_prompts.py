import numpy as np
import pytest

from signforge import prompts


BANK_TEXT = 'ASL\tHow do I say "{Text}" in sign language?\nGSL\tWie sage ich "{Text}" in GebĂ¤rdensprache?\n'


def test_parse_bank_single_template():
    bank = prompts.parse_bank('ASL\tHow do I say "{Text}" in sign language?\n')
    assert bank.counts == {"ASL": 1}
    assert bank.group("ASL")[0].pattern.startswith("How do I say")


def test_parse_bank_no_slot():
    with pytest.raises(prompts.BadSlot) as info:
        prompts.parse_bank("ASL\tno slot here\n")
    assert info.value.line_no == 1


def test_parse_bank_two_slots():
    with pytest.raises(prompts.BadSlot):
        prompts.parse_bank("ASL\t{Text} and {Text}\n")


def test_parse_bank_empty():
    with pytest.raises(prompts.NoTemplates):
        prompts.parse_bank("\n\n")


def test_parse_bank_missing_tab():
    with pytest.raises(prompts.MalformedTemplateLine):
        prompts.parse_bank("just a pattern {Text}\n")


def test_load_bank(tmp_path):
    path = tmp_path / "bank.tsv"
    path.write_text(BANK_TEXT, encoding="utf-8")
    bank = prompts.load_bank(path)
    assert bank.counts == {"ASL": 1, "GSL": 1}


def test_render_basic():
    tpl = prompts.PromptTemplate("ASL", "Say {Text}!")
    assert prompts.render(tpl, "hi") == "Say hi!"


def test_render_braces_verbatim():
    tpl = prompts.PromptTemplate("ASL", "Say {Text}!")
    assert prompts.render(tpl, "{weird} {Text}") == "Say {weird} {Text}!"


def test_render_empty_text():
    tpl = prompts.PromptTemplate("ASL", "Say {Text}!")
    assert prompts.render(tpl, "") == "Say !"


def test_render_preserves_fixed_parts(rng):
    # characters outside the slot never change
    for _ in range(50):
        n = int(rng.integers(0, 10))
        prefix = "".join(chr(97 + int(c)) for c in rng.integers(0, 26, n))
        suffix = "".join(chr(97 + int(c)) for c in rng.integers(0, 26, n))
        tpl = prompts.PromptTemplate("ASL", prefix + "{Text}" + suffix)
        text = "payload"
        rendered = prompts.render(tpl, text)
        assert rendered.startswith(prefix) and rendered.endswith(suffix)
        assert rendered[len(prefix):len(rendered) - len(suffix)] == text


def test_associate_single_template():
    bank = prompts.parse_bank("ASL\tsay {Text}\n")
    out = prompts.associate([("a", "hi", "ASL")], bank, seed=3)
    assert out == [("a", "say hi")]


def test_associate_deterministic():
    bank = prompts.parse_bank("".join(f"ASL\ttemplate {i} {{Text}}\n" for i in range(5)))
    corpus = [(f"id{i}", f"text{i}", "ASL") for i in range(20)]
    assert prompts.associate(corpus, bank, 7) == prompts.associate(corpus, bank, 7)
    assert prompts.associate(corpus, bank, 7) != prompts.associate(corpus, bank, 8)


def test_associate_missing_language():
    bank = prompts.parse_bank("ASL\tsay {Text}\n")
    with pytest.raises(prompts.MissingLanguage):
        prompts.associate([("a", "hi", "GSL")], bank, seed=0)


def test_associate_uniform_over_templates():
    # chi-square against uniform over 30 templates, 10k draws
    from scipy import stats

    n_templates = 30
    bank = prompts.parse_bank("".join(f"ASL\tt{i} {{Text}}\n" for i in range(n_templates)))
    corpus = [(f"id{i}", "x", "ASL") for i in range(10000)]
    out = prompts.associate(corpus, bank, seed=11)
    counts = np.zeros(n_templates)
    for _, prompt in out:
        counts[int(prompt.split()[0][1:])] += 1
    _, p = stats.chisquare(counts)
    assert p > 0.01


def test_augment_k1_matches_associate():
    bank = prompts.parse_bank("".join(f"ASL\tt{i} {{Text}}\n" for i in range(5)))
    corpus = [(f"id{i}", f"x{i}", "ASL") for i in range(10)]
    assert prompts.augment(corpus, bank, 1, 5) == prompts.associate(corpus, bank, 5)


def test_augment_distinct_templates_when_possible():
    bank = prompts.parse_bank("".join(f"ASL\tt{i} {{Text}}\n" for i in range(5)))
    out = prompts.augment([("a", "x", "ASL")], bank, 3, seed=2)
    assert len(out) == 3
    heads = [prompt.split()[0] for _, prompt in out]
    assert len(set(heads)) == 3


def test_augment_small_group_repeats():
    bank = prompts.parse_bank("ASL\tt0 {Text}\nASL\tt1 {Text}\n")
    out = prompts.augment([("a", "x", "ASL")], bank, 3, seed=2)
    assert len(out) == 3  # repeats allowed, size still k per item


def test_augment_output_size():
    bank = prompts.parse_bank("".join(f"ASL\tt{i} {{Text}}\n" for i in range(4)))
    corpus = [(f"id{i}", "x", "ASL") for i in range(7)]
    assert len(prompts.augment(corpus, bank, 3, seed=0)) == 21
