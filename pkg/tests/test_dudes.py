import random

import pytest

from lexiqa.deptree import DepNode, DepTree, Token
from lexiqa.dudes import (
    ClassAtom,
    Comparison,
    Dudes,
    Equality,
    Ordering,
    PropertyAtom,
    SelectionPair,
    Var,
    VarSession,
    ask_hint_dudes,
    canonical_text,
    compose,
    compose_tree,
    class_dudes,
    comparison_dudes,
    entity_dudes,
    property_dudes,
    superlative_dudes,
)
from lexiqa.errors import CompositionError
from lexiqa.lexicon import Degree, Frame, LexicalEntry, PartOfSpeech, SubjArg
from lexiqa.match import EntityMatch, MatchSource, PropertyMatch
from lexiqa.terms import IRI

from .oracles import compose_oracle

AM = "http://dbpedia.org/resource/Angela_Merkel"
BIRTH_NAME = "http://dbpedia.org/ontology/birthName"


def make_entry(**overrides) -> LexicalEntry:
    base = dict(
        id="birth-name",
        canonical_form="birth name",
        other_forms=(),
        part_of_speech=PartOfSpeech.NOUN,
        frame=Frame.NOUN_PP,
        reference=BIRTH_NAME,
        marker="of",
        subj_arg=SubjArg.SUBJECT_OF_PROPERTY,
    )
    base.update(overrides)
    return LexicalEntry(**base)


class TestConstructors:
    def test_entity_dudes_shape(self):
        d = entity_dudes(AM)
        assert d.main is not None
        assert d.universe == {d.main}
        assert d.conditions == (Equality(d.main, IRI(AM)),)
        assert d.selection_pairs == ()

    def test_fresh_variables_disjoint(self):
        d1 = entity_dudes(AM)
        d2 = entity_dudes("http://dbpedia.org/resource/Moscow")
        assert not d1.universe & d2.universe

    def test_property_dudes_pairs_and_orientation(self):
        d = property_dudes(make_entry())
        atom = d.conditions[0]
        assert isinstance(atom, PropertyAtom)
        marked_pair, value_pair = d.selection_pairs
        assert marked_pair.marker == "of"
        assert value_pair.marker is None
        # subject-of-property: the marked slot is the triple subject
        assert atom.subj == marked_pair.var
        assert atom.obj == value_pair.var
        assert d.main == value_pair.var

    def test_property_dudes_object_orientation(self):
        d = property_dudes(make_entry(subj_arg=SubjArg.OBJECT_OF_PROPERTY, marker="in"))
        atom = d.conditions[0]
        marked_pair, value_pair = d.selection_pairs
        assert atom.obj == marked_pair.var
        assert atom.subj == value_pair.var

    def test_property_dudes_no_marker(self):
        d = property_dudes(make_entry(marker=None))
        assert all(p.marker is None for p in d.selection_pairs)

    def test_property_dudes_rejects_superlative(self):
        entry = make_entry(frame=Frame.ADJECTIVE_SUPERLATIVE, marker=None, degree=Degree.MAX)
        with pytest.raises(CompositionError):
            property_dudes(entry)

    def test_superlative_dudes(self):
        entry = make_entry(
            id="high", canonical_form="high",
            frame=Frame.ADJECTIVE_SUPERLATIVE, marker=None, degree=Degree.MAX,
            reference="http://dbpedia.org/ontology/elevation",
        )
        d = superlative_dudes(entry)
        ordering = [c for c in d.conditions if isinstance(c, Ordering)]
        assert ordering == [Ordering(ordering[0].var, "max", 1)]
        assert len(d.selection_pairs) == 1
        assert d.main == d.selection_pairs[0].var

    def test_superlative_min_direction(self):
        entry = make_entry(
            id="short", canonical_form="short",
            frame=Frame.ADJECTIVE_SUPERLATIVE, marker=None, degree=Degree.MIN,
            reference="http://dbpedia.org/ontology/length",
        )
        d = superlative_dudes(entry)
        assert any(c.direction == "min" for c in d.conditions if isinstance(c, Ordering))


class TestCompose:
    def _fig_pair(self):
        session = VarSession()
        prop = property_dudes(make_entry(), session)
        ent = entity_dudes(AM, session)
        marked = prop.selection_pairs[0]
        return ent, prop, marked

    def test_condition_set_of_entity_into_property(self):
        ent, prop, marked = self._fig_pair()
        composed = compose(ent, prop, marked)
        z = ent.main
        y = prop.main
        assert set(composed.conditions) == {
            PropertyAtom(BIRTH_NAME, z, y),
            Equality(z, IRI(AM)),
        }
        assert composed.selection_pairs == (SelectionPair(y, None),)
        assert composed.universe == {z, y}

    def test_pair_must_belong_to_host(self):
        ent, prop, _ = self._fig_pair()
        foreign = SelectionPair(Var(999), "of")
        with pytest.raises(CompositionError):
            compose(ent, prop, foreign)

    def test_universes_must_be_disjoint(self):
        prop = property_dudes(make_entry())
        with pytest.raises(CompositionError):
            compose(prop, prop, prop.selection_pairs[0])

    def test_substituted_variable_gone(self):
        ent, prop, marked = self._fig_pair()
        composed = compose(ent, prop, marked)
        x = marked.var
        assert x not in composed.universe
        assert all(x not in (getattr(c, "subj", None), getattr(c, "obj", None))
                   for c in composed.conditions)
        assert all(p.var != x for p in composed.selection_pairs)

    def test_pair_count_arithmetic(self):
        ent, prop, marked = self._fig_pair()
        composed = compose(ent, prop, marked)
        assert len(composed.selection_pairs) == len(prop.selection_pairs) + len(
            ent.selection_pairs
        ) - 1

    def test_main_variable_branches(self):
        # x == v2: composed main becomes the argument's main
        session = VarSession()
        host = superlative_dudes(
            make_entry(id="high", canonical_form="high", frame=Frame.ADJECTIVE_SUPERLATIVE,
                       marker=None, degree=Degree.MAX), session,
        )
        arg = class_dudes("http://dbpedia.org/ontology/Mountain", session)
        composed = compose(arg, host, host.selection_pairs[0])
        assert composed.main == arg.main
        # x != v2: host keeps its main
        session = VarSession()
        host = property_dudes(make_entry(), session)
        arg = entity_dudes(AM, session)
        composed = compose(arg, host, host.selection_pairs[0])
        assert composed.main == host.main


def random_dudes(rng: random.Random, session: VarSession, need_pair: bool) -> Dudes:
    n_vars = rng.randint(1, 4)
    universe = [session.fresh() for _ in range(n_vars)]
    conditions = []
    for _ in range(rng.randint(0, 4)):
        kind = rng.choice(["prop", "eq", "cls", "cmp", "ord"])
        if kind == "prop":
            conditions.append(
                PropertyAtom(
                    f"http://x/p{rng.randint(0, 3)}",
                    rng.choice(universe + [IRI(f"http://x/e{rng.randint(0, 3)}")]),
                    rng.choice(universe + [IRI(f"http://x/e{rng.randint(0, 3)}")]),
                )
            )
        elif kind == "eq":
            conditions.append(Equality(rng.choice(universe), IRI(f"http://x/e{rng.randint(0, 3)}")))
        elif kind == "cls":
            conditions.append(ClassAtom(f"http://x/C{rng.randint(0, 2)}", rng.choice(universe)))
        elif kind == "cmp":
            conditions.append(Comparison(">", rng.choice(universe), float(rng.randint(0, 9))))
        else:
            conditions.append(Ordering(rng.choice(universe), rng.choice(["max", "min"]), 1))
    pair_vars = rng.sample(universe, rng.randint(1 if need_pair else 0, len(universe)))
    pairs = tuple(
        SelectionPair(v, rng.choice([None, "of", "in"])) for v in pair_vars
    )
    main = rng.choice(universe) if (need_pair is False or rng.random() < 0.8) else None
    if main is None and rng.random() < 0.5:
        main = rng.choice(universe)
    return Dudes(
        main=main if need_pair else rng.choice(universe),
        universe=frozenset(universe),
        conditions=tuple(conditions),
        selection_pairs=pairs,
    )


class TestComposeAgainstOracle:
    def test_randomized_compositions_match_set_arithmetic(self):
        rng = random.Random(4321)
        for _ in range(400):
            session = VarSession()
            d1 = random_dudes(rng, session, need_pair=False)
            d2 = random_dudes(rng, session, need_pair=True)
            pair = rng.choice(d2.selection_pairs)
            composed = compose(d1, d2, pair)
            universe, conditions, pairs, main = compose_oracle(d1, d2, pair)
            assert composed.universe == universe
            assert set(composed.conditions) == conditions
            assert set(composed.selection_pairs) == pairs
            assert composed.main == main


class TestCanonicalText:
    def test_renaming_invariance(self):
        def build(session):
            prop = property_dudes(make_entry(), session)
            return compose(entity_dudes(AM, session), prop, prop.selection_pairs[0])

        s1, s2 = VarSession(), VarSession()
        s2.fresh(), s2.fresh()  # offset the counter so variable ids differ
        assert canonical_text(build(s1)) == canonical_text(build(s2))

    def test_distinct_structures_distinct_text(self):
        d1 = entity_dudes(AM)
        d2 = class_dudes(AM)
        assert canonical_text(d1) != canonical_text(d2)


def annotated_node(node_id, head_id, tokens, **fields):
    toks = [Token(index=node_id * 10 + i, surface=s, lemma=s.lower()) for i, s in enumerate(tokens)]
    return DepNode(node_id=node_id, tokens=toks, upos="NOUN", deprel=fields.pop("deprel", "dep"),
                   head_id=head_id, **fields)


class TestComposeTree:
    def test_single_entity_node(self, lexicon):
        node = annotated_node(1, 0, ["Moscow"])
        node.entity_candidates = [
            EntityMatch("http://dbpedia.org/resource/Moscow", "moscow", 1.0,
                        MatchSource.LABEL_INDEX, (10, 10))
        ]
        tree = DepTree(nodes=[node], root_id=1, original_node_count=1)
        finals = list(compose_tree(tree, lexicon))
        assert len(finals) == 1
        assert isinstance(finals[0].conditions[0], Equality)

    def test_cartesian_enumeration_count(self, lexicon):
        # parent: 3 superlative candidates (one selection pair each);
        # child: 2 entity candidates -> exactly 6 final structures
        parent = annotated_node(1, 0, ["highest"])
        parent.entry_candidates = [
            PropertyMatch("high-superlative", 1.0, True, False),
            PropertyMatch("short-superlative", 0.9, False, False),
            PropertyMatch("large-superlative", 0.8, False, False),
        ]
        child = annotated_node(2, 1, ["Moscow"])
        child.entity_candidates = [
            EntityMatch("http://dbpedia.org/resource/Moscow", "moscow", 1.0,
                        MatchSource.LABEL_INDEX, (20, 20)),
            EntityMatch("http://dbpedia.org/resource/Berlin", "berlin", 0.6,
                        MatchSource.LABEL_INDEX, (20, 20)),
        ]
        tree = DepTree(nodes=[parent, child], root_id=1, original_node_count=2)
        finals = list(compose_tree(tree, lexicon))
        assert len(finals) == 6

    def test_unmatched_nodes_are_skipped(self, lexicon):
        root = annotated_node(1, 0, ["is"])
        child = annotated_node(2, 1, ["Moscow"])
        child.entity_candidates = [
            EntityMatch("http://dbpedia.org/resource/Moscow", "moscow", 1.0,
                        MatchSource.LABEL_INDEX, (20, 20))
        ]
        tree = DepTree(nodes=[root, child], root_id=1, original_node_count=2)
        finals = list(compose_tree(tree, lexicon))
        assert len(finals) == 1

    def test_enumeration_is_lazy(self, lexicon):
        calls = {"n": 0}

        class CountingList(list):
            def __iter__(self):
                for item in super().__iter__():
                    calls["n"] += 1
                    yield item

        parent = annotated_node(1, 0, ["highest"])
        parent.entry_candidates = [
            PropertyMatch("high-superlative", 1.0, True, False),
            PropertyMatch("short-superlative", 0.9, False, False),
            PropertyMatch("large-superlative", 0.8, False, False),
        ]
        child = annotated_node(2, 1, ["Moscow"])
        child.entity_candidates = [
            EntityMatch("http://dbpedia.org/resource/Moscow", "moscow", 1.0,
                        MatchSource.LABEL_INDEX, (20, 20)),
        ] * 2
        tree = DepTree(nodes=[parent, child], root_id=1, original_node_count=2)
        stream = compose_tree(tree, lexicon)
        first = next(stream)
        assert first is not None  # only one branch explored so far

    def test_deterministic_order(self, lexicon, question_trees, label_index):
        from lexiqa.match import match_entities, match_properties
        from lexiqa.merge import apply_generic_rules, apply_marker_rules

        tree = [t for t in question_trees if t.text == "Who is the mayor of Moscow?"][0]
        merged, _ = apply_generic_rules(tree, lexicon)
        merged, _ = apply_marker_rules(merged, lexicon)
        match_entities(label_index, merged)
        match_properties(lexicon, merged)
        first = [canonical_text(d) for d in compose_tree(merged, lexicon)]
        second = [canonical_text(d) for d in compose_tree(merged, lexicon)]
        assert first == second


class TestSpecialStructures:
    def test_ask_hint_merges_without_pair(self, lexicon):
        hint = ask_hint_dudes()
        assert hint.is_hint_only
        assert hint.universe == frozenset()

    def test_comparison_dudes(self):
        d = comparison_dudes(">", 2_000_000)
        cmp_cond = d.conditions[0]
        assert cmp_cond.op == ">"
        assert cmp_cond.rhs == 2_000_000
        assert d.selection_pairs == ()


class TestFirstYield:
    def test_birth_name_question_first_structure(self, lexicon, label_index, question_trees):
        """The first enumerated meaning for the birth-name question is the
        property atom with the person grounded and the name side open."""
        from lexiqa.match import find_entity_spans, match_entities, match_properties
        from lexiqa.merge import apply_entity_merging, apply_generic_rules, apply_marker_rules

        tree = [
            t for t in question_trees
            if t.text == "What is the birth name of Angela Merkel?"
            and t.parser_tag == "handud/core"
        ][0]
        merged, _ = apply_generic_rules(tree, lexicon)
        spans = find_entity_spans(label_index, merged)
        merged, _ = apply_entity_merging(merged, spans)[0]
        merged, _ = apply_marker_rules(merged, lexicon)
        match_entities(label_index, merged)
        match_properties(lexicon, merged)
        first = next(compose_tree(merged, lexicon))
        atoms = [c for c in first.conditions if isinstance(c, PropertyAtom)]
        equalities = [c for c in first.conditions if isinstance(c, Equality)]
        assert len(atoms) == 1 and len(equalities) == 1
        assert atoms[0].pred.endswith("birthName")
        z = equalities[0].var
        assert str(equalities[0].term).endswith("Angela_Merkel")
        assert atoms[0].subj == z
        assert isinstance(atoms[0].obj, Var)
        # the name side stays unconstrained
        y = atoms[0].obj
        assert all(c is atoms[0] for c in first.conditions if y in (getattr(c, "subj", None), getattr(c, "obj", None), getattr(c, "var", None)))
