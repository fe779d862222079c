//! Recursive-descent checker for the Graphviz DOT language.
//!
//! Accepts exactly the abstract grammar published with Graphviz (graph,
//! statement lists, node/edge/attribute statements, subgraphs, ports) and the
//! four ID forms: identifiers, numerals, double-quoted strings and HTML
//! strings. Comments and `#` preprocessor lines are skipped.

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Id(String),
    Keyword(&'static str),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Colon,
    Equals,
    EdgeOp(&'static str),
}

const KEYWORDS: [&str; 6] = ["strict", "graph", "digraph", "node", "edge", "subgraph"];

fn tokenize(src: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    let mut line_start = true;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line_start = true;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' && line_start {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        line_start = false;
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            i += 2;
            loop {
                if i + 1 >= chars.len() {
                    return Err("unterminated comment".into());
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    i += 2;
                    break;
                }
                i += 1;
            }
            continue;
        }
        let single = match c {
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ';' => Some(Tok::Semi),
            ',' => Some(Tok::Comma),
            ':' => Some(Tok::Colon),
            '=' => Some(Tok::Equals),
            _ => None,
        };
        if let Some(t) = single {
            toks.push(t);
            i += 1;
            continue;
        }
        if c == '-' && matches!(chars.get(i + 1), Some('>') | Some('-')) {
            toks.push(Tok::EdgeOp(if chars[i + 1] == '>' { "->" } else { "--" }));
            i += 2;
            continue;
        }
        if c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err("unterminated string".into()),
                    Some('"') => break,
                    // a backslash always pairs with the next character
                    Some('\\') => match chars.get(i + 1) {
                        None => return Err("unterminated string".into()),
                        Some(&next) => {
                            s.push('\\');
                            s.push(next);
                            i += 2;
                        }
                    },
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            i += 1;
            toks.push(Tok::Id(s));
            continue;
        }
        if c == '<' {
            let mut depth = 0;
            let start = i;
            loop {
                match chars.get(i) {
                    None => return Err("unterminated HTML string".into()),
                    Some('<') => depth += 1,
                    Some('>') => {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    _ => {}
                }
                i += 1;
            }
            i += 1;
            toks.push(Tok::Id(chars[start..i].iter().collect()));
            continue;
        }
        if c == '-' || c == '.' || c.is_ascii_digit() {
            let start = i;
            if c == '-' {
                i += 1;
            }
            let mut digits = 0;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
                digits += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                    digits += 1;
                }
            }
            if digits == 0 {
                return Err(format!("malformed numeral at offset {start}"));
            }
            if i < chars.len() && (chars[i].is_alphabetic() || chars[i] == '_') {
                return Err(format!("numeral followed by identifier at offset {start}"));
            }
            toks.push(Tok::Id(chars[start..i].iter().collect()));
            continue;
        }
        if c.is_alphabetic() || c == '_' || (c as u32) >= 0x80 {
            let start = i;
            while i < chars.len()
                && (chars[i].is_alphanumeric() || chars[i] == '_' || (chars[i] as u32) >= 0x80)
            {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            match KEYWORDS.iter().find(|k| k.eq_ignore_ascii_case(&word)) {
                Some(k) => toks.push(Tok::Keyword(k)),
                None => toks.push(Tok::Id(word)),
            }
            continue;
        }
        return Err(format!("unexpected character {c:?}"));
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    edge_op: &'static str,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<(), String> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(format!("expected {t:?}, found {:?}", self.peek()))
        }
    }

    fn id(&mut self) -> Result<String, String> {
        match self.peek() {
            Some(Tok::Id(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            other => Err(format!("expected ID, found {other:?}")),
        }
    }

    fn graph(&mut self) -> Result<(), String> {
        self.eat(&Tok::Keyword("strict"));
        self.edge_op = if self.eat(&Tok::Keyword("digraph")) {
            "->"
        } else if self.eat(&Tok::Keyword("graph")) {
            "--"
        } else {
            return Err("expected graph or digraph".into());
        };
        if matches!(self.peek(), Some(Tok::Id(_))) {
            self.pos += 1;
        }
        self.expect(Tok::LBrace)?;
        self.stmt_list()?;
        self.expect(Tok::RBrace)?;
        if self.pos != self.toks.len() {
            return Err("trailing tokens after graph".into());
        }
        Ok(())
    }

    fn stmt_list(&mut self) -> Result<(), String> {
        while !matches!(self.peek(), Some(Tok::RBrace) | None) {
            self.stmt()?;
            self.eat(&Tok::Semi);
        }
        Ok(())
    }

    fn stmt(&mut self) -> Result<(), String> {
        match self.peek() {
            Some(Tok::Keyword("graph")) | Some(Tok::Keyword("node")) | Some(Tok::Keyword("edge")) => {
                self.pos += 1;
                if self.peek() != Some(&Tok::LBracket) {
                    return Err("attribute statement without attribute list".into());
                }
                self.attr_list()
            }
            Some(Tok::Id(_)) if self.toks.get(self.pos + 1) == Some(&Tok::Equals) => {
                self.pos += 2;
                self.id().map(|_| ())
            }
            Some(Tok::Id(_)) => {
                self.node_id()?;
                self.edge_tail()
            }
            Some(Tok::Keyword("subgraph")) | Some(Tok::LBrace) => {
                self.subgraph()?;
                self.edge_tail()
            }
            other => Err(format!("unexpected {other:?} at statement start")),
        }
    }

    fn edge_tail(&mut self) -> Result<(), String> {
        while let Some(Tok::EdgeOp(op)) = self.peek() {
            if *op != self.edge_op {
                return Err(format!("edge operator {op} in a graph using {}", self.edge_op));
            }
            self.pos += 1;
            match self.peek() {
                Some(Tok::Id(_)) => self.node_id()?,
                Some(Tok::Keyword("subgraph")) | Some(Tok::LBrace) => self.subgraph()?,
                other => return Err(format!("edge to {other:?}")),
            }
        }
        if self.peek() == Some(&Tok::LBracket) {
            self.attr_list()?;
        }
        Ok(())
    }

    fn node_id(&mut self) -> Result<(), String> {
        self.id()?;
        if self.eat(&Tok::Colon) {
            self.id()?;
            if self.eat(&Tok::Colon) {
                self.id()?;
            }
        }
        Ok(())
    }

    fn subgraph(&mut self) -> Result<(), String> {
        if self.eat(&Tok::Keyword("subgraph")) && matches!(self.peek(), Some(Tok::Id(_))) {
            self.pos += 1;
        }
        self.expect(Tok::LBrace)?;
        self.stmt_list()?;
        self.expect(Tok::RBrace)
    }

    fn attr_list(&mut self) -> Result<(), String> {
        while self.eat(&Tok::LBracket) {
            while self.peek() != Some(&Tok::RBracket) {
                self.id()?;
                self.expect(Tok::Equals)?;
                self.id()?;
                if !self.eat(&Tok::Semi) {
                    self.eat(&Tok::Comma);
                }
            }
            self.expect(Tok::RBracket)?;
        }
        Ok(())
    }
}

/// `Ok(())` when `src` is a single well-formed DOT graph.
pub fn check_dot(src: &str) -> Result<(), String> {
    let toks = tokenize(src)?;
    Parser {
        toks,
        pos: 0,
        edge_op: "->",
    }
    .graph()
}
