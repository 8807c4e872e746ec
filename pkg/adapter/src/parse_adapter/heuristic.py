"""Deterministic rule-based English question parser.

No external models: closed-class word lists, an NP chunker and a handful
of clause patterns. Two attachment styles are provided as separate models
so the adapter can emit genuinely different trees per question:

  nounattach  adpositions become case children of the following noun
              phrase head (UD style)
  verbattach  adpositions hang off the preceding content word with the
              noun phrase head below them (ClearNLP style)

Output quality is adequate for wh- and polar questions; the point is a
dependable offline backend, not treebank accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass

MODELS = ("nounattach", "verbattach")

_PUNCT = set("?!.,;:")
_DET = {"the", "a", "an", "this", "that", "these", "those"}
_WH_DET = {"which", "what", "whose"}
_WH_PRON = {"who", "whom", "what"}
_AUX = {"is", "are", "was", "were", "am", "be", "been", "do", "does", "did",
        "can", "could", "will", "would", "should", "must", "may"}
_HAVE = {"have", "has", "had"}
_ADP = {"of", "in", "by", "from", "through", "at", "on", "with", "for", "to",
        "into", "near", "than"}
_CCONJ = {"and", "or"}
_ADV = {"how", "where", "when", "why"}
_ADJ = {"many", "more", "fewer", "high", "higher", "highest", "short", "shorter",
        "shortest", "long", "longer", "longest", "large", "larger", "largest",
        "big", "bigger", "biggest", "deep", "deeper", "deepest", "small",
        "smaller", "smallest", "old", "older", "oldest", "famous", "first"}
_VERB = {"wrote", "write", "writes", "written", "flow", "flows", "flowed",
         "live", "lives", "lived", "born", "run", "runs", "ran", "cross",
         "crosses", "crossed", "begin", "begins", "began", "die", "dies",
         "died", "direct", "directed", "directs", "star", "starred", "stars",
         "win", "wins", "won", "create", "created", "creates", "speak",
         "speaks", "spoke", "locate", "located", "border", "borders",
         "bordered"}
_NUM_WORDS = {"zero", "one", "two", "three", "four", "five", "six", "seven",
              "eight", "nine", "ten", "eleven", "twelve", "thirteen",
              "fourteen", "fifteen", "sixteen", "seventeen", "eighteen",
              "nineteen", "twenty", "thirty", "forty", "fifty", "sixty",
              "seventy", "eighty", "ninety", "hundred", "thousand", "million"}
_LEMMA_IRREGULAR = {
    "is": "be", "are": "be", "was": "be", "were": "be", "am": "be", "been": "be",
    "wrote": "write", "written": "write", "has": "have", "had": "have",
    "did": "do", "does": "do", "done": "do", "born": "bear", "ran": "run",
    "began": "begin", "spoke": "speak", "won": "win", "people": "people",
    "children": "child", "men": "man", "women": "woman", "cities": "city",
    "countries": "country", "dynasties": "dynasty",
}


@dataclass(slots=True)
class Word:
    index: int  # 1-based
    surface: str
    lemma: str = ""
    upos: str = "X"
    head: int = 0
    deprel: str = "dep"


def tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    for chunk in text.split():
        start = 0
        end = len(chunk)
        lead: list[str] = []
        trail: list[str] = []
        while start < end and chunk[start] in _PUNCT:
            lead.append(chunk[start])
            start += 1
        while end > start and chunk[end - 1] in _PUNCT:
            trail.insert(0, chunk[end - 1])
            end -= 1
        tokens.extend(lead)
        if end > start:
            tokens.append(chunk[start:end])
        tokens.extend(trail)
    return tokens


def _lemma(surface: str, upos: str) -> str:
    if upos == "PROPN" or upos == "NUM":
        return surface
    low = surface.lower()
    if low in _LEMMA_IRREGULAR:
        return _LEMMA_IRREGULAR[low]
    if upos in ("NOUN", "VERB"):
        if low.endswith("ies") and len(low) > 4:
            return low[:-3] + "y"
        if low.endswith("s") and not low.endswith("ss") and len(low) > 3:
            return low[:-1]
    if upos == "ADJ":
        if low.endswith("est") and low[:-3] in _ADJ:
            return low[:-3]
        if low.endswith("er") and low[:-2] in _ADJ:
            return low[:-2]
    return low


def _is_number(token: str) -> bool:
    return token.lower() in _NUM_WORDS or token.replace(",", "").replace(".", "").isdigit()


def _tag(tokens: list[str]) -> list[Word]:
    has_other_verb = any(t.lower() in _VERB for t in tokens)
    words = []
    for position, token in enumerate(tokens, start=1):
        low = token.lower()
        if token in _PUNCT or all(c in _PUNCT for c in token):
            upos = "PUNCT"
        elif _is_number(token):
            upos = "NUM"
        elif low in _WH_DET:
            nxt = tokens[position].lower() if position < len(tokens) else ""
            standalone = position >= len(tokens) or nxt in _AUX or nxt in _PUNCT
            upos = "PRON" if (low in _WH_PRON and standalone) else "DET"
        elif low in _WH_PRON:
            upos = "PRON"
        elif low in _DET:
            upos = "DET"
        elif low in _AUX:
            upos = "AUX"
        elif low in _HAVE:
            upos = "AUX" if has_other_verb else "VERB"
        elif low in _ADP:
            upos = "ADP"
        elif low in _CCONJ:
            upos = "CCONJ"
        elif low in _ADV:
            upos = "ADV"
        elif low in _ADJ or (low.endswith(("est", "er")) and len(low) > 4 and low[:-2] in _ADJ):
            upos = "ADJ"
        elif low in _VERB:
            upos = "VERB"
        elif token[0].isupper() and position > 1:
            upos = "PROPN"
        else:
            upos = "NOUN"
        words.append(Word(index=position, surface=token, upos=upos))
    for word in words:
        word.lemma = _lemma(word.surface, word.upos)
    return words


_NP_UPOS = {"DET", "ADJ", "NUM", "NOUN", "PROPN", "ADV"}


def _chunk_nps(words: list[Word]) -> list[list[Word]]:
    """Maximal noun-phrase runs; adverbs only join before an adjective."""
    chunks: list[list[Word]] = []
    current: list[Word] = []
    for pos, word in enumerate(words):
        joinable = word.upos in _NP_UPOS
        if word.upos == "ADV":
            nxt = words[pos + 1] if pos + 1 < len(words) else None
            joinable = nxt is not None and nxt.upos in ("ADJ", "NUM")
        if word.upos == "ADJ" and word.lemma in ("more", "fewer"):
            joinable = True
        if word.upos == "CCONJ":
            prev_num = current and current[-1].upos == "NUM"
            nxt = words[pos + 1] if pos + 1 < len(words) else None
            joinable = prev_num and nxt is not None and nxt.upos == "NUM"
        if word.upos == "DET" and current:
            chunks.append(current)  # a determiner opens a fresh noun phrase
            current = []
        if joinable:
            current.append(word)
        else:
            if current:
                chunks.append(current)
                current = []
    if current:
        chunks.append(current)
    return chunks


def _attach_np(chunk: list[Word]) -> Word:
    """Wire a noun phrase internally, returning its head word."""
    nouns = [w for w in chunk if w.upos in ("NOUN", "PROPN")]
    head = nouns[-1] if nouns else chunk[-1]
    # number sub-phrases: runs of NUM, optionally joined by a conjunction
    runs: list[list[Word]] = []
    current: list[Word] = []
    for word in chunk:
        if word.upos == "NUM":
            current.append(word)
        elif word.upos == "CCONJ" and current:
            current.append(word)
        else:
            if current:
                runs.append(current)
                current = []
    if current:
        runs.append(current)
    num_head = None
    for run in runs:
        sub_runs: list[list[Word]] = [[]]
        for word in run:
            if word.upos == "CCONJ":
                sub_runs.append([word])
            else:
                sub_runs[-1].append(word)
        first = [w for w in sub_runs[0] if w.upos == "NUM"]
        run_head = first[-1]
        for word in first[:-1]:
            word.head, word.deprel = run_head.index, "compound"
        for sub in sub_runs[1:]:
            cc = sub[0]
            nums = [w for w in sub if w.upos == "NUM"]
            if not nums:
                cc.head, cc.deprel = run_head.index, "cc"
                continue
            conj_head = nums[-1]
            conj_head.head, conj_head.deprel = run_head.index, "conj"
            cc.head, cc.deprel = conj_head.index, "cc"
            for word in nums[:-1]:
                word.head, word.deprel = conj_head.index, "compound"
        if run_head is not head:
            run_head.head, run_head.deprel = head.index, "nummod"
        num_head = num_head or run_head
    for word in chunk:
        if word is head or word.head:
            continue
        if word.upos == "DET":
            word.head, word.deprel = head.index, "det"
        elif word.upos == "ADJ" and word.lemma in ("more", "fewer") and num_head is not None:
            word.head, word.deprel = num_head.index, "advmod"
        elif word.upos == "ADJ":
            word.head, word.deprel = head.index, "amod"
        elif word.upos == "ADV":
            nxt = next((w for w in chunk if w.index == word.index + 1), None)
            word.head = nxt.index if nxt else head.index
            word.deprel = "advmod"
        elif word.upos in ("NOUN", "PROPN"):
            word.head, word.deprel = head.index, "compound"
        else:
            word.head, word.deprel = head.index, "dep"
    return head


def parse(text: str, model: str = "nounattach") -> list[Word]:
    if model not in MODELS:
        raise ValueError(f"unknown heuristic model {model!r}")
    words = _tag(tokenize(text))
    if not words:
        return words
    chunks = _chunk_nps(words)
    all_heads = [_attach_np(chunk) for chunk in chunks]
    by_index = {w.index: w for w in words}

    # comparatives: "more than NUM" hangs off the number phrase head
    for word in words:
        if word.lemma in ("more", "fewer") and not word.head:
            than = by_index.get(word.index + 1)
            number = by_index.get(word.index + 2)
            if than is not None and than.lemma == "than" and number is not None and number.upos == "NUM":
                run_head = number
                while run_head.head and by_index[run_head.head].upos == "NUM":
                    run_head = by_index[run_head.head]
                word.head, word.deprel = run_head.index, "advmod"
                than.head, than.deprel = word.index, "fixed"

    heads = [h for h in all_heads if not h.head]
    verbs = [w for w in words if w.upos == "VERB"]
    wh = next((w for w in words if w.upos == "PRON" and w.lemma in _WH_PRON), None)
    aux_tokens = [w for w in words if w.upos == "AUX"]
    content_before: dict[int, Word] = {}
    last_content = None
    for word in words:
        if word.upos in ("NOUN", "PROPN", "NUM", "VERB", "ADJ"):
            last_content = word
        content_before[word.index] = last_content

    def np_head_after(index: int) -> Word | None:
        for head in heads:
            if head.index > index:
                return head
        return None

    root: Word
    if verbs:
        root = verbs[0]
        for aux in aux_tokens:
            if aux.index < root.index and not aux.head:
                aux.head, aux.deprel = root.index, "aux"
        if wh is not None and wh.index < root.index:
            wh.head, wh.deprel = root.index, "nsubj"
        pre = [h for h in heads if h.index < root.index and h is not root]
        if pre:
            pre[-1].head, pre[-1].deprel = root.index, "nsubj"
            for extra in pre[:-1]:
                if not extra.head:
                    extra.head, extra.deprel = root.index, "dep"
        post = [h for h in heads if h.index > root.index and h is not root]
        for pos, head in enumerate(post):
            adp_between = [
                w for w in words
                if w.upos == "ADP" and not w.head
                and root.index < w.index < head.index
                and (pos == 0 or w.index > post[pos - 1].index)
            ]
            if not head.head:
                head.head, head.deprel = root.index, ("obl" if adp_between else "obj")
    else:
        # copular question; verbattach mirrors parsers that root the copula
        first_aux = aux_tokens[0] if aux_tokens else None
        np_after_aux = np_head_after(first_aux.index) if first_aux else None
        if model == "verbattach" and first_aux is not None and np_after_aux is not None:
            root = first_aux
            if wh is not None:
                wh.head, wh.deprel = root.index, "nsubj"
                np_after_aux.head, np_after_aux.deprel = root.index, "attr"
            elif first_aux.index == 1 and len(heads) >= 2:
                heads[0].head, heads[0].deprel = root.index, "nsubj"
                heads[1].head, heads[1].deprel = root.index, "attr"
            else:
                np_after_aux.head, np_after_aux.deprel = root.index, "attr"
        elif wh is not None and np_after_aux is not None:
            root = np_after_aux
            wh.head, wh.deprel = root.index, "nsubj"
        elif first_aux is not None and first_aux.index == 1 and len(heads) >= 2:
            subject, root = heads[0], heads[1]
            subject.head, subject.deprel = root.index, "nsubj"
        elif heads:
            root = heads[-1]
            if wh is not None and root is not wh:
                wh.head, wh.deprel = root.index, "nsubj"
        else:
            root = words[0]
        for aux in aux_tokens:
            if not aux.head and aux is not root:
                aux.head, aux.deprel = root.index, "cop"

    # adpositions and the noun phrases they introduce
    for word in words:
        if word.upos != "ADP" or word.head:
            continue
        if word.lemma == "than":
            more = next(
                (w for w in words if w.lemma in ("more", "fewer") and w.index == word.index - 1),
                None,
            )
            if more is not None:
                word.head, word.deprel = more.index, "fixed"
                continue
        np_head = np_head_after(word.index)
        anchor = content_before[word.index]
        if model == "nounattach":
            if np_head is not None:
                word.head, word.deprel = np_head.index, "case"
                if not np_head.head and anchor is not None and np_head is not anchor:
                    np_head.head = anchor.index
                    np_head.deprel = "nmod" if anchor.upos in ("NOUN", "PROPN") else "obl"
            elif anchor is not None:
                word.head, word.deprel = anchor.index, "case"
        else:
            if anchor is not None and anchor is not word:
                word.head, word.deprel = anchor.index, "prep"
            if np_head is not None and not np_head.head:
                np_head.head, np_head.deprel = word.index, "pobj"

    root.head, root.deprel = 0, "root"
    for word in words:
        if word.upos == "PUNCT" and not word.head:
            word.head, word.deprel = root.index, "punct"
        elif not word.head and word is not root:
            word.head, word.deprel = root.index, "dep"
    _repair(words, root, by_index)
    return words


def _repair(words: list[Word], root: Word, by_index: dict[int, Word]) -> None:
    """Break head cycles and stray links so the result is always a tree."""
    for word in words:
        if word is root:
            continue
        seen = {word.index}
        cur = word
        while cur.head != 0:
            parent = by_index.get(cur.head)
            if parent is None or parent.index in seen:
                word.head, word.deprel = root.index, "dep"
                break
            seen.add(parent.index)
            cur = parent
