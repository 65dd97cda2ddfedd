"""Parse-tree, label, and embedding file readers with the unified
in-memory sentence representation.

Constituency input is one bracketed tree per line (treebank style, with
optional integer sentiment tags on constituents).  Dependency input is
CoNLL-X blocks separated by blank lines.  Embeddings use the word2vec
text format: a "count dim" header followed by "token v1 .. v_dim" rows.
"""

from __future__ import annotations

import io
import os
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ContractError, FormatError, ParseError, StructureError

CONSTITUENCY = "constituency"
DEPENDENCY = "dependency"

UNK_TOKEN = "<unk>"
# Fixed seed for the synthetic UNK row so corpora load reproducibly.
_UNK_SEED = 90210

SHARED_RELATION = "<shared>"


@dataclass
class TreeNode:
    word: Optional[str] = None
    embedding_index: Optional[int] = None
    children: List[int] = field(default_factory=list)
    dep_relation: Optional[str] = None
    depth_layer: int = 0
    position: Optional[int] = None  # 1-based word position (dependency only)
    label: Optional[int] = None     # sentiment tag on constituents


@dataclass
class ParseTree:
    kind: str
    nodes: List[TreeNode]
    root: int
    sentence_label: Optional[int] = None

    def __len__(self) -> int:
        return len(self.nodes)

    def depth(self) -> int:
        return max(n.depth_layer for n in self.nodes)

    def leaf_indices(self) -> List[int]:
        """Childless nodes in left-to-right order."""
        if self.kind == DEPENDENCY:
            order = sorted(range(len(self.nodes)),
                           key=lambda v: self.nodes[v].position)
            return [v for v in order if not self.nodes[v].children]
        out: List[int] = []
        stack = [self.root]
        while stack:
            v = stack.pop()
            kids = self.nodes[v].children
            if not kids:
                out.append(v)
            else:
                stack.extend(reversed(kids))
        return out

    def words(self) -> List[str]:
        """Sentence tokens in surface order."""
        if self.kind == DEPENDENCY:
            order = sorted(self.nodes, key=lambda n: n.position)
            return [n.word for n in order]
        return [self.nodes[v].word for v in self.leaf_indices()]

    def word_count(self) -> int:
        return len(self.words())


def validate_tree(tree: ParseTree) -> None:
    """Check the structural invariants; raises StructureError on breach."""
    n = len(tree.nodes)
    if n == 0:
        raise StructureError("tree has no nodes")
    parent = [None] * n
    for v, node in enumerate(tree.nodes):
        for c in node.children:
            if parent[c] is not None:
                raise StructureError(f"node {c} has two parents")
            parent[c] = v
    roots = [v for v in range(n) if parent[v] is None]
    if roots != [tree.root]:
        raise StructureError(f"expected single root {tree.root}, found {roots}")
    seen = 0
    queue = deque([tree.root])
    while queue:
        v = queue.popleft()
        seen += 1
        node = tree.nodes[v]
        expect = 1 if v == tree.root else tree.nodes[parent[v]].depth_layer + 1
        if node.depth_layer != expect:
            raise StructureError(f"node {v} depth_layer {node.depth_layer} != {expect}")
        queue.extend(node.children)
    if seen != n:
        raise StructureError("child links do not form a tree")
    if tree.kind == DEPENDENCY:
        positions = sorted(node.position for node in tree.nodes)
        if positions != list(range(1, n + 1)):
            raise StructureError(f"word positions {positions} are not 1..{n}")
        for v, node in enumerate(tree.nodes):
            has_rel = node.dep_relation is not None
            if (v != tree.root) != has_rel:
                raise StructureError(f"node {v}: dep_relation presence is wrong")
    else:
        for v, node in enumerate(tree.nodes):
            if len(node.children) > 2:
                raise StructureError(f"node {v} has {len(node.children)} children")


# ---------------------------------------------------------------------------
# constituency trees
# ---------------------------------------------------------------------------

class _Sexp:
    __slots__ = ("head", "children", "word")

    def __init__(self, head, children, word):
        self.head = head
        self.children = children
        self.word = word


def _skip_ws(text: str, i: int) -> int:
    while i < len(text) and text[i].isspace():
        i += 1
    return i


def _read_token(text: str, i: int) -> Tuple[str, int]:
    j = i
    while j < len(text) and not text[j].isspace() and text[j] not in "()":
        j += 1
    return text[i:j], j


def _read_sexp(text: str, i: int) -> Tuple[_Sexp, int]:
    # caller guarantees text[i] == '('
    open_at = i
    i = _skip_ws(text, i + 1)
    head = None
    if i < len(text) and text[i] not in "()":
        head, i = _read_token(text, i)
    children: List[_Sexp] = []
    words: List[str] = []
    while True:
        i = _skip_ws(text, i)
        if i >= len(text):
            raise ParseError("unbalanced '('", offset=open_at)
        c = text[i]
        if c == "(":
            child, i = _read_sexp(text, i)
            children.append(child)
        elif c == ")":
            i += 1
            break
        else:
            word, i = _read_token(text, i)
            words.append(word)
    if children and words:
        raise ParseError("constituent mixes words and subtrees", offset=open_at)
    if len(words) > 1:
        raise ParseError("constituent has more than one terminal", offset=open_at)
    if not children and not words:
        raise ParseError("empty constituent", offset=open_at)
    return _Sexp(head, children, words[0] if words else None), i


def _parse_label(head: Optional[str]) -> Optional[int]:
    if head is None:
        return None
    try:
        return int(head)
    except ValueError:
        return None


def _binarize(sexp: _Sexp) -> _Sexp:
    if sexp.word is not None:
        return sexp
    kids = [_binarize(k) for k in sexp.children]
    if len(kids) > 2:
        def chain(rest: List[_Sexp]) -> _Sexp:
            if len(rest) == 1:
                return rest[0]
            return _Sexp(None, [rest[0], chain(rest[1:])], None)
        kids = [kids[0], chain(kids[1:])]
    return _Sexp(sexp.head, kids, sexp.word)


def parse_constituency(text: str) -> ParseTree:
    """Parse one bracketed tree, binarizing n-ary constituents.

    Nodes with three or more children become right-branching chains of
    unlabeled auxiliary nodes; unary constituents are kept as-is.  Leaf
    order is preserved exactly.
    """
    i = _skip_ws(text, 0)
    if i >= len(text):
        raise ParseError("empty tree", offset=i)
    if text[i] != "(":
        raise ParseError(f"expected '(' but found {text[i]!r}", offset=i)
    sexp, i = _read_sexp(text, i)
    i = _skip_ws(text, i)
    if i < len(text):
        raise ParseError(f"trailing content {text[i]!r}", offset=i)

    sexp = _binarize(sexp)
    nodes: List[TreeNode] = []

    def build(s: _Sexp, depth: int) -> int:
        v = len(nodes)
        nodes.append(TreeNode(word=s.word, depth_layer=depth,
                              label=_parse_label(s.head)))
        nodes[v].children = [build(k, depth + 1) for k in s.children]
        return v

    root = build(sexp, 1)
    return ParseTree(kind=CONSTITUENCY, nodes=nodes, root=root,
                     sentence_label=nodes[root].label)


def serialize_constituency(tree: ParseTree) -> str:
    """Bracketed form of a (binarized) constituency tree.

    Unlabeled constituents serialize with the placeholder tag "X", which
    reads back as no label; re-parsing yields an isomorphic tree.
    """
    if tree.kind != CONSTITUENCY:
        raise ContractError("serialize_constituency needs a constituency tree")

    def render(v: int) -> str:
        node = tree.nodes[v]
        head = "X" if node.label is None else str(node.label)
        if not node.children:
            return f"({head} {node.word})"
        inner = " ".join(render(c) for c in node.children)
        return f"({head} {inner})"

    return render(tree.root)


def subtree_at(tree: ParseTree, v: int) -> ParseTree:
    """Copy of the subtree rooted at node v as an independent tree."""
    nodes: List[TreeNode] = []

    def build(u: int, depth: int) -> int:
        src = tree.nodes[u]
        w = len(nodes)
        nodes.append(TreeNode(word=src.word, embedding_index=src.embedding_index,
                              depth_layer=depth, label=src.label))
        nodes[w].children = [build(c, depth + 1) for c in src.children]
        return w

    root = build(v, 1)
    return ParseTree(kind=tree.kind, nodes=nodes, root=root,
                     sentence_label=tree.nodes[v].label)


def extract_subsentences(tree: ParseTree) -> List[ParseTree]:
    """Every tagged constituent as an independent labeled sample.

    The whole sentence is included when its root carries a tag.  Used to
    enlarge the training set only; validation and test stay on whole
    sentences.
    """
    if tree.kind != CONSTITUENCY:
        raise ContractError("sub-sentence extraction needs constituency trees")
    return [subtree_at(tree, v) for v, node in enumerate(tree.nodes)
            if node.label is not None]


def read_constituency_file(source) -> List[ParseTree]:
    """One bracketed tree per non-blank line."""
    trees = []
    for lineno, line in enumerate(_as_lines(source), start=1):
        if not line.strip():
            continue
        try:
            trees.append(parse_constituency(line))
        except ParseError as e:
            raise ParseError(f"{e} (tree at line {lineno})") from e
    if not trees:
        raise ParseError("no trees in input", line=1)
    return trees


# ---------------------------------------------------------------------------
# dependency trees
# ---------------------------------------------------------------------------

def parse_dependency(block) -> ParseTree:
    """Parse one CoNLL-X record block into a dependency tree.

    Columns used: 1 = token id (1-based, contiguous), 2 = word form,
    7 = head id (0 marks the root), 8 = relation.  Lines need at least
    8 tab-separated columns.
    """
    if isinstance(block, str):
        lines = block.splitlines()
    else:
        lines = list(block)
    rows: List[Tuple[int, str, int, str]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) < 8:
            raise ParseError(
                f"CoNLL line has {len(cols)} columns, need at least 8",
                line=lineno,
            )
        try:
            tok_id = int(cols[0])
            head = int(cols[6])
        except ValueError:
            raise ParseError("CoNLL id/head is not an integer", line=lineno)
        rows.append((tok_id, cols[1], head, cols[7]))
    if not rows:
        raise ParseError("empty CoNLL block", line=1)

    n = len(rows)
    ids = [r[0] for r in rows]
    if ids != list(range(1, n + 1)):
        raise ParseError(f"token ids {ids} are not contiguous 1..{n}")

    roots = [tok_id for tok_id, _, head, _ in rows if head == 0]
    if len(roots) != 1:
        raise StructureError(f"expected exactly one root token, found ids {roots}")

    nodes = []
    for tok_id, word, head, rel in rows:
        if not 0 <= head <= n:
            raise StructureError(f"token {tok_id} has head {head} outside 0..{n}")
        nodes.append(TreeNode(word=word, position=tok_id,
                              dep_relation=None if head == 0 else rel))
    for tok_id, _, head, _ in rows:
        if head != 0:
            nodes[head - 1].children.append(tok_id - 1)

    root = roots[0] - 1
    seen = set()
    queue = deque([root])
    nodes[root].depth_layer = 1
    while queue:
        v = queue.popleft()
        seen.add(v)
        for c in nodes[v].children:
            nodes[c].depth_layer = nodes[v].depth_layer + 1
            queue.append(c)
    if len(seen) != n:
        stranded = sorted(v + 1 for v in range(n) if v not in seen)
        raise StructureError(f"head cycle involving token ids {stranded}")

    return ParseTree(kind=DEPENDENCY, nodes=nodes, root=root)


def serialize_dependency(tree: ParseTree) -> str:
    """CoNLL-X block for a dependency tree (unused columns padded with _)."""
    if tree.kind != DEPENDENCY:
        raise ContractError("serialize_dependency needs a dependency tree")
    head_of = {}
    for v, node in enumerate(tree.nodes):
        for c in node.children:
            head_of[c] = v
    lines = []
    for v in sorted(range(len(tree.nodes)), key=lambda v: tree.nodes[v].position):
        node = tree.nodes[v]
        if v == tree.root:
            head, rel = 0, "root"
        else:
            head = tree.nodes[head_of[v]].position
            rel = node.dep_relation
        lines.append(f"{node.position}\t{node.word}\t_\t_\t_\t_\t{head}\t{rel}")
    return "\n".join(lines)


def read_dependency_file(source) -> List[ParseTree]:
    """CoNLL blocks separated by blank lines."""
    trees = []
    block: List[str] = []
    start_line = 1
    for lineno, line in enumerate(_as_lines(source), start=1):
        if line.strip():
            if not block:
                start_line = lineno
            block.append(line)
        elif block:
            trees.append(_parse_block(block, start_line))
            block = []
    if block:
        trees.append(_parse_block(block, start_line))
    if not trees:
        raise ParseError("no CoNLL blocks in input", line=1)
    return trees


def _parse_block(block: List[str], start_line: int) -> ParseTree:
    try:
        return parse_dependency(block)
    except (ParseError, StructureError) as e:
        raise type(e)(f"{e} (block starting at line {start_line})") from e


def _as_lines(source) -> Iterable[str]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as fh:
            yield from fh
    else:
        yield from source


# ---------------------------------------------------------------------------
# vocabulary and embeddings
# ---------------------------------------------------------------------------

@dataclass
class Vocabulary:
    """Dense token-to-index map with a reserved UNK index."""

    index: Dict[str, int]
    unk_index: int

    def __len__(self) -> int:
        return len(self.index) + 1

    def lookup(self, token: str) -> int:
        """Exact match first, then lowercased, then UNK."""
        idx = self.index.get(token)
        if idx is not None:
            return idx
        idx = self.index.get(token.lower())
        if idx is not None:
            return idx
        return self.unk_index

    def tokens_in_order(self) -> List[str]:
        ordered = [None] * len(self.index)
        for tok, i in self.index.items():
            ordered[i] = tok
        return ordered


@dataclass
class EmbeddingTable:
    """Vocabulary-indexed word vectors; row `unk_index` backs OOV tokens."""

    vectors: np.ndarray  # (size, dim) float64

    def __post_init__(self):
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float64)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def row(self, index: int) -> np.ndarray:
        return self.vectors[index]


def load_embeddings(source) -> Tuple[Vocabulary, EmbeddingTable]:
    """Read word2vec text format; appends a fixed-seed UNK row.

    The header line is "count dim"; each following line is a token and
    dim space-separated values.  A row with the wrong arity raises
    FormatError with its line number.
    """
    lines = iter(_as_lines(source))
    try:
        header = next(lines)
    except StopIteration:
        raise FormatError("empty embedding file", line=1)
    parts = header.split()
    if len(parts) != 2:
        raise FormatError("embedding header must be 'count dim'", line=1)
    try:
        count, dim = int(parts[0]), int(parts[1])
    except ValueError:
        raise FormatError("embedding header must be 'count dim'", line=1)
    if count < 1 or dim < 1:
        raise FormatError("embedding header counts must be positive", line=1)

    index: Dict[str, int] = {}
    rows = np.empty((count + 1, dim), dtype=np.float64)
    lineno = 1
    loaded = 0
    for raw in lines:
        lineno += 1
        if not raw.strip():
            continue
        fields = raw.split()
        if len(fields) != dim + 1:
            raise FormatError(
                f"embedding row has {len(fields) - 1} values, expected {dim}",
                line=lineno,
            )
        token = fields[0]
        if token in index:
            raise FormatError(f"duplicate token {token!r}", line=lineno)
        if loaded >= count:
            raise FormatError("more rows than the header promised", line=lineno)
        try:
            rows[loaded] = [float(x) for x in fields[1:]]
        except ValueError:
            raise FormatError("embedding value is not a number", line=lineno)
        index[token] = loaded
        loaded += 1
    if loaded != count:
        raise FormatError(f"header promised {count} rows, found {loaded}",
                          line=lineno)

    rng = np.random.default_rng(_UNK_SEED)
    rows[count] = rng.uniform(-0.01, 0.01, size=dim)
    return Vocabulary(index=index, unk_index=count), EmbeddingTable(rows)


def vocabulary_from_corpus(trees: Sequence[ParseTree]) -> Vocabulary:
    """Vocabulary over every word in the corpus, in first-seen order."""
    index: Dict[str, int] = {}
    for tree in trees:
        for node in tree.nodes:
            if node.word is not None and node.word not in index:
                index[node.word] = len(index)
    return Vocabulary(index=index, unk_index=len(index))


def random_embeddings(vocab: Vocabulary, dim: int, seed: int) -> EmbeddingTable:
    """Uniform(-0.1, 0.1) embedding rows for corpora without a vector file."""
    rng = np.random.default_rng(seed)
    return EmbeddingTable(rng.uniform(-0.1, 0.1, size=(len(vocab), dim)))


def bind_vocabulary(tree: ParseTree, vocab: Vocabulary) -> None:
    """Fill embedding_index on every word-bearing node."""
    for node in tree.nodes:
        if node.word is not None:
            node.embedding_index = vocab.lookup(node.word)


# ---------------------------------------------------------------------------
# dependency-type inventory
# ---------------------------------------------------------------------------

@dataclass
class DepTypeInventory:
    """Relation-to-weight-slot map: dedicated slots plus one SHARED slot."""

    slot_ids: Dict[str, int]
    shared_slot: int
    dedicated: Tuple[str, ...]

    @property
    def n_slots(self) -> int:
        return self.shared_slot + 1

    def slot_of(self, relation: Optional[str]) -> int:
        if relation is None:
            return self.shared_slot
        return self.slot_ids.get(relation, self.shared_slot)

    def slot_name(self, slot: int) -> str:
        if slot == self.shared_slot:
            return SHARED_RELATION
        return self.dedicated[slot]


def build_dep_inventory(trees: Sequence[ParseTree],
                        max_dedicated: int = 15) -> DepTypeInventory:
    """Dedicated slots for the most frequent relations, SHARED for the rest.

    Frequency ties break lexicographically (smaller relation name wins).
    Corpora with fewer distinct relations than `max_dedicated` dedicate
    them all; SHARED always exists.
    """
    counts: Counter = Counter()
    for tree in trees:
        if tree.kind != DEPENDENCY:
            raise ContractError("dependency inventory needs dependency trees")
        for v, node in enumerate(tree.nodes):
            if v != tree.root:
                counts[node.dep_relation] += 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    dedicated = tuple(rel for rel, _ in ranked[:max_dedicated])
    slot_ids = {rel: i for i, rel in enumerate(dedicated)}
    return DepTypeInventory(slot_ids=slot_ids, shared_slot=len(dedicated),
                            dedicated=dedicated)


# ---------------------------------------------------------------------------
# label files
# ---------------------------------------------------------------------------

def read_label_file(source) -> List[Tuple[str, int]]:
    """Lines of "LABEL<TAB>sentence-id"; ids are 0-based tree positions."""
    pairs = []
    for lineno, raw in enumerate(_as_lines(source), start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise FormatError("label line must be 'LABEL<TAB>sentence-id'",
                              line=lineno)
        try:
            sid = int(cols[1])
        except ValueError:
            raise FormatError("sentence-id is not an integer", line=lineno)
        pairs.append((cols[0], sid))
    if not pairs:
        raise FormatError("empty label file", line=1)
    return pairs


def attach_labels(trees: Sequence[ParseTree],
                  pairs: Sequence[Tuple[str, int]]) -> List[str]:
    """Assign class indices from label names (sorted) to the named trees.

    Returns the class-name list defining the index order.
    """
    names = sorted({label for label, _ in pairs})
    class_of = {name: i for i, name in enumerate(names)}
    for label, sid in pairs:
        if not 0 <= sid < len(trees):
            raise StructureError(
                f"label refers to sentence {sid} but corpus has {len(trees)}"
            )
        trees[sid].sentence_label = class_of[label]
    return names
