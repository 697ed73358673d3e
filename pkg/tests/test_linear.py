import random

from conftest import legacy_session, type_keys
from oracles import gen_linear_tokens, parse_linear, to_content_xml
from semedit.document import validate_document
from semedit.engine import Key, Press, Session, SetMode
from semedit.linear import classify_letter_run, precedence_widen
from semedit.mathml import serialize_content


def content(s):
    return s.export_content()


# -- worked keystroke examples ----------------------------------------------

def test_y_equals_sin_x(registry):
    s = legacy_session(registry, "y=sinx")
    assert content(s) == ("<math><apply><eq/><ci>y</ci><apply><sin/>"
                          "<ci>x</ci></apply></apply></math>")


def test_y_equals_2aab(registry):
    s = legacy_session(registry, "y=2aab")
    assert content(s) == (
        "<math><apply><eq/><ci>y</ci><apply><times/><cn>2</cn>"
        "<apply><power/><ci>a</ci><cn>2</cn></apply><ci>b</ci>"
        "</apply></apply></math>")


def test_legacy_one_over_x_plus_one(registry):
    s = legacy_session(registry, "y=1/x+1")
    assert content(s) == (
        "<math><apply><eq/><ci>y</ci><apply><plus/><apply><divide/>"
        "<cn>1</cn><ci>x</ci></apply><cn>1</cn></apply></apply></math>")


def test_basic_one_over_x_plus_one(registry):
    s = type_keys(Session(registry=registry), "y=1/x+1")
    assert content(s) == (
        "<math><apply><eq/><ci>y</ci><apply><divide/><cn>1</cn>"
        "<apply><plus/><ci>x</ci><cn>1</cn></apply></apply></apply></math>")


def test_power_stays_inside_denominator(registry):
    # incoming '^' binds tighter than the fraction: no widening
    s = legacy_session(registry, "1/x^2")
    assert content(s) == (
        "<math><apply><divide/><cn>1</cn><apply><power/><ci>x</ci>"
        "<cn>2</cn></apply></apply></math>")


def test_exponent_exit_on_lower_precedence(registry):
    s = legacy_session(registry, "2a^2b")
    assert content(s) == (
        "<math><apply><times/><cn>2</cn><apply><power/><ci>a</ci>"
        "<cn>2</cn></apply><ci>b</ci></apply></math>")


# -- classify_letter_run -------------------------------------------------------

def test_classify_function(registry):
    assert classify_letter_run("sin", registry) == ("function", "sin")


def test_classify_repeated_letters(registry):
    assert classify_letter_run("aa", registry) == ("product", [("a", 2)])
    assert classify_letter_run("aaa", registry) == ("product", [("a", 3)])


def test_classify_product(registry):
    assert classify_letter_run("ab", registry) == \
        ("product", [("a", 1), ("b", 1)])
    assert classify_letter_run("aba", registry) == \
        ("product", [("a", 1), ("b", 1), ("a", 1)])


def test_sik_flushes_as_product(registry):
    s = legacy_session(registry, "sik")
    assert content(s) == (
        "<math><apply><times/><ci>s</ci><ci>i</ci><ci>k</ci></apply></math>")


def test_aba_is_not_squared(registry):
    s = legacy_session(registry, "aba")
    s.apply(SetMode("basic"))  # flush the trailing pending letter
    assert content(s) == (
        "<math><apply><times/><ci>a</ci><ci>b</ci><ci>a</ci></apply></math>")


def test_pending_buffer_invariant(registry):
    rng = random.Random(5)
    s = Session(registry=registry)
    s.apply(SetMode("legacy"))
    names = s.registry.function_names()
    for _ in range(400):
        s.apply(Key(rng.choice("sincostanlgxyab123+*")))
        assert (len(s.pending) <= 1
                or any(n.startswith(s.pending) for n in names))


def test_pending_exposed_until_committed(registry):
    s = Session(registry=registry)
    s.apply(SetMode("legacy"))
    type_keys(s, "si")
    assert s.pending == "si"
    assert content(s) == "<math/>"
    s.apply(Key("n"))
    assert s.pending == "sin"
    s.apply(Key("x"))
    assert s.pending == ""


def test_multi_digit_number_is_one_token(registry):
    s = legacy_session(registry, "12+3")
    assert content(s) == ("<math><apply><plus/><cn>12</cn><cn>3</cn>"
                          "</apply></math>")


def test_number_letter_juxtaposition(registry):
    s = legacy_session(registry, "2x")
    assert content(s) == ("<math><apply><times/><cn>2</cn><ci>x</ci>"
                          "</apply></math>")


# -- widening ------------------------------------------------------------------

def test_widen_is_outward_only_and_idempotent(registry):
    s = legacy_session(registry, "y=1/x")
    caret0 = s.doc.caret
    c1 = precedence_widen(s, 3, "left")
    assert len(c1.path) < len(caret0.path)
    c2 = precedence_widen(s, 3, "left")
    assert c2 == c1


def test_widen_stops_at_equation(registry):
    s = legacy_session(registry, "y=x")
    c = precedence_widen(s, 1, "left")
    # still inside the eq right slot, never crossed the sentence level
    assert c.path[:3] == (0, 0, 0)
    assert len(c.path) > 3


def test_left_assoc_chain_groups_left(registry):
    s = legacy_session(registry, "9-3-2")
    assert content(s) == (
        "<math><apply><minus/><apply><minus/><cn>9</cn><cn>3</cn></apply>"
        "<cn>2</cn></apply></math>")


def test_power_chain_groups_right(registry):
    s = legacy_session(registry, "2^3^2")
    assert content(s) == (
        "<math><apply><power/><cn>2</cn><apply><power/><cn>3</cn>"
        "<cn>2</cn></apply></apply></math>")


# -- mode equivalence -----------------------------------------------------------

def test_mode_equivalence_fully_bracketed(registry):
    # no function names, no repeated letters, explicit brackets everywhere
    streams = ["(1+2)", "((1+2)*3)", "(x-(y*2))", "((a/b)^2)"]
    for text in streams:
        basic = type_keys(Session(registry=registry), text)
        legacy = legacy_session(registry, text)
        assert basic.doc.root.structurally_equal(legacy.doc.root), text


# -- oracle equivalence -----------------------------------------------------------

def test_shunting_yard_oracle_equivalence(registry):
    for seed in range(400):
        rng = random.Random(seed)
        tokens = gen_linear_tokens(rng)
        expected = to_content_xml(parse_linear(tokens))
        s = Session(registry=registry)
        s.apply(SetMode("legacy"))
        for t in tokens:
            s.apply(Key(t))
        s.apply(SetMode("basic"))  # flush any trailing pending letter
        got = serialize_content(s.doc, registry)
        assert got == expected, f"seed {seed}: {''.join(tokens)}"
        validate_document(s.doc)
