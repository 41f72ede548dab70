use std::fmt;

/// Label of empty-category preterminals (traces, null complementizers).
pub const EMPTY_CATEGORY: &str = "-NONE-";

/// Half-open range of terminal indices. Empty categories occupy no terminals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// A constituency tree node. Preterminals carry a `token` and no children;
/// every other node has at least one child.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseNode {
    pub label: String,
    pub children: Vec<ParseNode>,
    pub token: Option<String>,
    pub span: Span,
}

impl ParseNode {
    pub fn leaf(label: impl Into<String>, token: impl Into<String>) -> Self {
        ParseNode {
            label: label.into(),
            children: Vec::new(),
            token: Some(token.into()),
            span: Span::default(),
        }
    }

    pub fn node(label: impl Into<String>, children: Vec<ParseNode>) -> Self {
        ParseNode {
            label: label.into(),
            children,
            token: None,
            span: Span::default(),
        }
    }

    pub fn is_preterminal(&self) -> bool {
        self.token.is_some()
    }

    pub fn is_empty_category(&self) -> bool {
        self.label == EMPTY_CATEGORY
    }

    /// Syntactic category without function tags or coindexation:
    /// `NP-SBJ-1` → `NP`, `PP-LOC=2` → `PP`. Labels that start with a dash
    /// (`-NONE-`, `-LRB-`) are returned unchanged.
    pub fn category(&self) -> &str {
        category_of(&self.label)
    }

    /// Function tags attached to the label (`NP-SBJ-1` → `["SBJ"]`).
    pub fn function_tags(&self) -> Vec<&str> {
        if self.label.starts_with('-') {
            return Vec::new();
        }
        self.label
            .split(['-', '='])
            .skip(1)
            .filter(|t| !t.is_empty() && !t.chars().all(|c| c.is_ascii_digit()))
            .collect()
    }

    /// Terminals left to right, skipping empty categories.
    pub fn yield_tokens(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_yield(&mut out);
        out
    }

    fn collect_yield<'a>(&'a self, out: &mut Vec<&'a str>) {
        if let Some(tok) = &self.token {
            if !self.is_empty_category() {
                out.push(tok);
            }
            return;
        }
        for c in &self.children {
            c.collect_yield(out);
        }
    }

    /// True if any descendant (or the node itself) is an empty category.
    pub fn contains_empty_category(&self) -> bool {
        self.is_empty_category() || self.children.iter().any(|c| c.contains_empty_category())
    }

    /// Pre-order traversal.
    pub fn preorder(&self) -> Preorder<'_> {
        Preorder { stack: vec![self] }
    }

    /// Assigns terminal spans to the whole tree, starting at terminal 0.
    pub fn assign_spans(&mut self) {
        let mut next = 0;
        self.assign_from(&mut next);
    }

    fn assign_from(&mut self, next: &mut usize) {
        let start = *next;
        if self.token.is_some() {
            if !self.is_empty_category() {
                *next += 1;
            }
        } else {
            for c in &mut self.children {
                c.assign_from(next);
            }
        }
        self.span = Span { start, end: *next };
    }

    /// Single-line bracketed rendering, the inverse of [`parse_treebank`](super::parse_treebank).
    pub fn to_bracketed(&self) -> String {
        let mut s = String::new();
        self.write_bracketed(&mut s);
        s
    }

    fn write_bracketed(&self, out: &mut String) {
        out.push('(');
        out.push_str(&self.label);
        if let Some(tok) = &self.token {
            out.push(' ');
            out.push_str(tok);
        }
        for c in &self.children {
            out.push(' ');
            c.write_bracketed(out);
        }
        out.push(')');
    }
}

impl fmt::Display for ParseNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bracketed())
    }
}

pub fn category_of(label: &str) -> &str {
    if label.starts_with('-') {
        return label;
    }
    match label.find(['-', '=']) {
        Some(i) => &label[..i],
        None => label,
    }
}

pub struct Preorder<'a> {
    stack: Vec<&'a ParseNode>,
}

impl<'a> Iterator for Preorder<'a> {
    type Item = &'a ParseNode;

    fn next(&mut self) -> Option<Self::Item> {
        let node = self.stack.pop()?;
        self.stack.extend(node.children.iter().rev());
        Some(node)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedEof,
    UnexpectedClose,
    UnexpectedAtom,
    EmptyLabel,
    MissingChildren,
    MixedTerminal,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("treebank parse error at byte {offset}: {}", describe(*.kind))]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

fn describe(kind: ParseErrorKind) -> &'static str {
    match kind {
        ParseErrorKind::UnexpectedEof => "unbalanced parentheses (unexpected end of input)",
        ParseErrorKind::UnexpectedClose => "unbalanced parentheses (unexpected ')')",
        ParseErrorKind::UnexpectedAtom => "expected '(' to start a tree",
        ParseErrorKind::EmptyLabel => "empty label",
        ParseErrorKind::MissingChildren => "node has neither a word nor children",
        ParseErrorKind::MixedTerminal => "word and subtrees mixed under one node",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    /// Next token and its byte offset; `None` at end of input.
    fn peek(&mut self) -> Option<(usize, Tok<'a>)> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let c = rest.chars().next()?;
        let tok = match c {
            '(' => Tok::Open,
            ')' => Tok::Close,
            _ => {
                let end = rest
                    .find(|c: char| c.is_whitespace() || c == '(' || c == ')')
                    .unwrap_or(rest.len());
                Tok::Atom(&rest[..end])
            }
        };
        Some((self.pos, tok))
    }

    fn bump(&mut self, tok: Tok<'_>) {
        self.pos += match tok {
            Tok::Open | Tok::Close => 1,
            Tok::Atom(a) => a.len(),
        };
    }
}

/// Parses a stream of bracketed trees. A label-less outer bracket wrapping a
/// single tree (the `( (S ...) )` convention of `.mrg` files) is unwrapped.
pub fn parse_treebank(source: &str) -> Result<Vec<ParseNode>, ParseError> {
    let mut lx = Lexer { src: source, pos: 0 };
    let mut trees = Vec::new();
    while let Some((off, tok)) = lx.peek() {
        match tok {
            Tok::Open => {}
            Tok::Close => return Err(ParseError { offset: off, kind: ParseErrorKind::UnexpectedClose }),
            Tok::Atom(_) => return Err(ParseError { offset: off, kind: ParseErrorKind::UnexpectedAtom }),
        }
        let mut tree = parse_node(&mut lx, true)?;
        tree.assign_spans();
        trees.push(tree);
    }
    Ok(trees)
}

fn parse_node(lx: &mut Lexer<'_>, top_level: bool) -> Result<ParseNode, ParseError> {
    let (open_off, _) = lx.peek().expect("caller saw '('");
    lx.bump(Tok::Open);
    let eof = |lx: &Lexer<'_>| ParseError { offset: lx.src.len(), kind: ParseErrorKind::UnexpectedEof };

    let label = match lx.peek() {
        None => return Err(eof(lx)),
        Some((_, Tok::Atom(a))) => {
            lx.bump(Tok::Atom(a));
            Some(a.to_string())
        }
        Some((_, Tok::Open)) => None,
        Some((off, Tok::Close)) => return Err(ParseError { offset: off, kind: ParseErrorKind::EmptyLabel }),
    };

    let mut children = Vec::new();
    let mut token: Option<String> = None;
    loop {
        match lx.peek() {
            None => return Err(eof(lx)),
            Some((_, Tok::Close)) => {
                lx.bump(Tok::Close);
                break;
            }
            Some((off, Tok::Open)) => {
                if token.is_some() {
                    return Err(ParseError { offset: off, kind: ParseErrorKind::MixedTerminal });
                }
                children.push(parse_node(lx, false)?);
            }
            Some((off, Tok::Atom(a))) => {
                if token.is_some() || !children.is_empty() || label.is_none() {
                    return Err(ParseError { offset: off, kind: ParseErrorKind::MixedTerminal });
                }
                lx.bump(Tok::Atom(a));
                token = Some(a.to_string());
            }
        }
    }

    match label {
        Some(label) => {
            if token.is_none() && children.is_empty() {
                return Err(ParseError { offset: open_off, kind: ParseErrorKind::MissingChildren });
            }
            Ok(ParseNode { label, children, token, span: Span::default() })
        }
        None if top_level && children.len() == 1 => Ok(children.pop().expect("one child")),
        None => Err(ParseError { offset: open_off + 1, kind: ParseErrorKind::EmptyLabel }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_tree_yield_and_spans() {
        let trees = parse_treebank("(S (NP (DT the) (NN dog)) (VP (VBD ran)))").unwrap();
        assert_eq!(trees.len(), 1);
        let t = &trees[0];
        assert_eq!(t.yield_tokens().join(" "), "the dog ran");
        assert_eq!(t.children.len(), 2);
        assert_eq!(t.span, Span { start: 0, end: 3 });
        assert_eq!(t.children[0].span, Span { start: 0, end: 2 });
        assert_eq!(t.children[1].span, Span { start: 2, end: 3 });
    }

    #[test]
    fn unbalanced_input_reports_end_offset() {
        let src = "(S (NP (DT the)";
        let err = parse_treebank(src).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnexpectedEof);
        assert_eq!(err.offset, src.len());
    }

    #[test]
    fn stray_close_paren() {
        let err = parse_treebank("(S (NN a)))").unwrap_err();
        assert_eq!(err, ParseError { offset: 10, kind: ParseErrorKind::UnexpectedClose });
    }

    #[test]
    fn empty_labels_rejected() {
        assert_eq!(parse_treebank("()").unwrap_err().kind, ParseErrorKind::EmptyLabel);
        let err = parse_treebank("(S ((NN a)))").unwrap_err();
        assert_eq!(err, ParseError { offset: 4, kind: ParseErrorKind::EmptyLabel });
    }

    #[test]
    fn ptb_wrapper_unwrapped() {
        let trees = parse_treebank("( (S (NP (PRP I)) (VP (VBD ran))) )\n( (S (VP (VB go))) )").unwrap();
        assert_eq!(trees.len(), 2);
        assert_eq!(trees[0].label, "S");
        assert_eq!(trees[1].yield_tokens(), vec!["go"]);
    }

    #[test]
    fn empty_categories_leave_yield_but_stay_in_tree() {
        let src = "(S (NP-SBJ-1 (DT The) (NN money)) (VP (VBD was) (VP (VBN moved) (NP (-NONE- *-1)) (PP (TO to) (NP (NN savings))))))";
        let t = &parse_treebank(src).unwrap()[0];
        assert_eq!(t.yield_tokens().join(" "), "The money was moved to savings");
        assert_eq!(t.to_bracketed(), src);
        let trace = t.preorder().find(|n| n.is_empty_category()).unwrap();
        assert!(trace.span.is_empty());
        assert_eq!(trace.span.start, 4);
    }

    #[test]
    fn categories_and_tags() {
        let n = ParseNode::node("NP-SBJ-1", vec![ParseNode::leaf("NN", "x")]);
        assert_eq!(n.category(), "NP");
        assert_eq!(n.function_tags(), vec!["SBJ"]);
        assert_eq!(category_of("PP-LOC=2"), "PP");
        assert_eq!(category_of("-NONE-"), "-NONE-");
        assert_eq!(category_of("PRP$"), "PRP$");
    }

    #[test]
    fn word_without_label_or_mixed_content_rejected() {
        assert_eq!(parse_treebank("(NN a b)").unwrap_err().kind, ParseErrorKind::MixedTerminal);
        assert_eq!(parse_treebank("(NP (NN a) b)").unwrap_err().kind, ParseErrorKind::MixedTerminal);
        assert_eq!(parse_treebank("(NP)").unwrap_err().kind, ParseErrorKind::MissingChildren);
        assert_eq!(parse_treebank("word").unwrap_err().kind, ParseErrorKind::UnexpectedAtom);
    }
}
