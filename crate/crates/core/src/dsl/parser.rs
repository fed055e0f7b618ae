//! Recursive-descent parser with panic-mode recovery at `}`.
//!
//! ```text
//! scenario  := "scenario" STRING "{" {asset | lesson} "}"
//! asset     := "asset" IDENT "{" {property} "}"
//! lesson    := "lesson" IDENT STRING "{" {stage} "}"
//! stage     := "stage" IDENT STRING "{" {action} "}"
//! action    := "action" IDENT kind "{" {property} "}"
//! kind      := "insert" | "remove" | "tool" | "use" | "quiz"
//! property  := KEY "=" value
//! value     := STRING | NUMBER | pose | list
//! pose      := "pose" "(" NUMBER {"," NUMBER} ")"      (exactly 7 numbers)
//! list      := "[" [value {"," value} [","]] "]"
//! ```
//!
//! Property keys may be identifiers or keywords (`tool = "Chisel"`).

use std::collections::BTreeSet;

use super::ast::*;
use super::diag::{Diagnostic, Span};
use super::lexer::{lex, Keyword, Token, TokenKind};
use crate::scene::{GrabMode, Tag};

pub const DEFAULT_CLEARANCE_M: f64 = 0.3;
pub const DEFAULT_TOOL_ACTIVE_S: f64 = 1.0;
pub const DEFAULT_SWEEP_M: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Str(String),
    Num(f64),
    Pose([f64; 7]),
    List(Vec<(Value, Span)>),
}

impl Value {
    fn describe(&self) -> &'static str {
        match self {
            Value::Str(_) => "string",
            Value::Num(_) => "number",
            Value::Pose(_) => "pose",
            Value::List(_) => "list",
        }
    }
}

#[derive(Debug)]
struct Prop {
    key: String,
    key_span: Span,
    value: Value,
    value_span: Span,
}

/// Failure that already produced a diagnostic; the caller recovers.
struct Bail;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn at(&self, kind: &TokenKind) -> bool {
        &self.peek().kind == kind
    }

    fn at_kw(&self, kw: Keyword) -> bool {
        self.at(&TokenKind::Keyword(kw))
    }

    fn error_here(&mut self, expected: &str) -> Bail {
        let tok = self.peek().clone();
        self.diags.push(Diagnostic::error(
            tok.span,
            format!("expected {expected}, found {}", tok.kind),
        ));
        Bail
    }

    fn expect(&mut self, kind: TokenKind, expected: &str) -> Result<Token, Bail> {
        if self.at(&kind) {
            Ok(self.advance())
        } else {
            Err(self.error_here(expected))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, Span), Bail> {
        match &self.peek().kind {
            TokenKind::Ident(s) => {
                let s = s.clone();
                let t = self.advance();
                Ok((s, t.span))
            }
            _ => Err(self.error_here(what)),
        }
    }

    fn expect_string(&mut self, what: &str) -> Result<String, Bail> {
        match &self.peek().kind {
            TokenKind::Str(s) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            _ => Err(self.error_here(what)),
        }
    }

    /// Skips the rest of a construct. `depth` is the number of unmatched `{`
    /// already consumed for it; stops after the matching `}` or before a `}`
    /// that belongs to an enclosing block.
    fn skip(&mut self, mut depth: usize) {
        loop {
            match self.peek().kind {
                TokenKind::Eof => return,
                TokenKind::LBrace => {
                    depth += 1;
                    self.advance();
                }
                TokenKind::RBrace => {
                    if depth == 0 {
                        return;
                    }
                    self.advance();
                    depth -= 1;
                    if depth == 0 {
                        return;
                    }
                }
                _ => {
                    self.advance();
                }
            }
        }
    }

    fn scenario(&mut self) -> Option<ScenarioDoc> {
        if !self.at_kw(Keyword::Scenario) {
            let span = self.peek().span;
            self.diags
                .push(Diagnostic::error(span, "expected 'scenario'"));
            return None;
        }
        self.advance();
        let name = self.expect_string("scenario name string").ok()?;
        self.expect(TokenKind::LBrace, "'{'").ok()?;

        let mut doc = ScenarioDoc {
            name,
            assets: Vec::new(),
            lessons: Vec::new(),
        };
        loop {
            match &self.peek().kind {
                TokenKind::RBrace => {
                    self.advance();
                    break;
                }
                TokenKind::Eof => {
                    self.error_here("'}' closing the scenario");
                    return Some(doc);
                }
                TokenKind::Keyword(Keyword::Asset) => {
                    if let Some(a) = self.asset() {
                        doc.assets.push(a);
                    }
                }
                TokenKind::Keyword(Keyword::Lesson) => {
                    if let Some(l) = self.lesson() {
                        doc.lessons.push(l);
                    }
                }
                _ => {
                    self.error_here("'asset' or 'lesson'");
                    self.advance();
                    self.skip(0);
                }
            }
        }
        if !self.at(&TokenKind::Eof) {
            let tok = self.peek().clone();
            self.diags.push(Diagnostic::error(
                tok.span,
                format!("unexpected {} after the scenario block", tok.kind),
            ));
        }
        Some(doc)
    }

    fn header_id(&mut self, what: &str) -> Result<(String, Span), Bail> {
        self.advance();
        self.expect_ident(what)
    }

    fn asset(&mut self) -> Option<AssetDef> {
        let header = self.header_id("asset identifier").and_then(|id| {
            self.expect(TokenKind::LBrace, "'{'")?;
            Ok(id)
        });
        let (id, span) = match header {
            Ok(h) => h,
            Err(Bail) => {
                self.skip(0);
                return None;
            }
        };
        let props = self.block_props()?;
        interpret_asset(id, span, props, &mut self.diags)
    }

    fn lesson(&mut self) -> Option<LessonDef> {
        let header = self.header_id("lesson identifier").and_then(|id| {
            let title = self.expect_string("lesson title string")?;
            self.expect(TokenKind::LBrace, "'{'")?;
            Ok((id, title))
        });
        let ((id, span), title) = match header {
            Ok(h) => h,
            Err(Bail) => {
                self.skip(0);
                return None;
            }
        };
        let mut stages = Vec::new();
        loop {
            match &self.peek().kind {
                TokenKind::RBrace => {
                    self.advance();
                    break;
                }
                TokenKind::Eof => {
                    self.error_here("'}' closing the lesson");
                    break;
                }
                TokenKind::Keyword(Keyword::Stage) => {
                    if let Some(s) = self.stage() {
                        stages.push(s);
                    }
                }
                _ => {
                    self.error_here("'stage'");
                    self.skip(1);
                    break;
                }
            }
        }
        Some(LessonDef {
            id,
            title,
            loc: Loc(span),
            stages,
        })
    }

    fn stage(&mut self) -> Option<StageDef> {
        let header = self.header_id("stage identifier").and_then(|id| {
            let title = self.expect_string("stage title string")?;
            self.expect(TokenKind::LBrace, "'{'")?;
            Ok((id, title))
        });
        let ((id, span), title) = match header {
            Ok(h) => h,
            Err(Bail) => {
                self.skip(0);
                return None;
            }
        };
        let mut actions = Vec::new();
        loop {
            match &self.peek().kind {
                TokenKind::RBrace => {
                    self.advance();
                    break;
                }
                TokenKind::Eof => {
                    self.error_here("'}' closing the stage");
                    break;
                }
                TokenKind::Keyword(Keyword::Action) => {
                    if let Some(a) = self.action() {
                        actions.push(a);
                    }
                }
                _ => {
                    self.error_here("'action'");
                    self.skip(1);
                    break;
                }
            }
        }
        Some(StageDef {
            id,
            title,
            loc: Loc(span),
            actions,
        })
    }

    fn action(&mut self) -> Option<ActionDef> {
        let header = self.header_id("action identifier").and_then(|id| {
            let kind = match self.peek().kind {
                TokenKind::Keyword(
                    k @ (Keyword::Insert
                    | Keyword::Remove
                    | Keyword::Tool
                    | Keyword::Use
                    | Keyword::Quiz),
                ) => {
                    self.advance();
                    k
                }
                _ => return Err(self.error_here("action kind (insert, remove, tool, use, quiz)")),
            };
            self.expect(TokenKind::LBrace, "'{'")?;
            Ok((id, kind))
        });
        let ((id, span), kind) = match header {
            Ok(h) => h,
            Err(Bail) => {
                self.skip(0);
                return None;
            }
        };
        let props = self.block_props()?;
        interpret_action(id, span, kind, props, &mut self.diags)
    }

    /// Parses `{property}` up to and including the closing `}`. Duplicate
    /// keys are reported and the first occurrence wins.
    fn block_props(&mut self) -> Option<Vec<Prop>> {
        let mut props: Vec<Prop> = Vec::new();
        loop {
            let tok = self.peek().clone();
            let key = match &tok.kind {
                TokenKind::RBrace => {
                    self.advance();
                    return Some(props);
                }
                TokenKind::Ident(s) => s.clone(),
                TokenKind::Keyword(k) => k.as_str().to_string(),
                _ => {
                    self.error_here("property name or '}'");
                    self.skip(1);
                    return None;
                }
            };
            self.advance();
            let parsed = self
                .expect(TokenKind::Eq, "'='")
                .and_then(|_| self.value());
            let (value, value_span) = match parsed {
                Ok(v) => v,
                Err(Bail) => {
                    self.skip(1);
                    return None;
                }
            };
            if props.iter().any(|p| p.key == key) {
                self.diags.push(Diagnostic::error(
                    tok.span,
                    format!("duplicate key '{key}'"),
                ));
                continue;
            }
            props.push(Prop {
                key,
                key_span: tok.span,
                value,
                value_span,
            });
        }
    }

    fn value(&mut self) -> Result<(Value, Span), Bail> {
        let tok = self.peek().clone();
        match &tok.kind {
            TokenKind::Str(s) => {
                self.advance();
                Ok((Value::Str(s.clone()), tok.span))
            }
            TokenKind::Number(n) => {
                self.advance();
                Ok((Value::Num(*n), tok.span))
            }
            TokenKind::Ident(s) if s == "pose" => {
                self.advance();
                self.expect(TokenKind::LParen, "'(' after 'pose'")?;
                let mut nums = Vec::new();
                loop {
                    match self.peek().kind {
                        TokenKind::Number(n) => {
                            nums.push(n);
                            self.advance();
                        }
                        _ => return Err(self.error_here("number")),
                    }
                    if self.at(&TokenKind::Comma) {
                        self.advance();
                        continue;
                    }
                    break;
                }
                let close = self.expect(TokenKind::RParen, "')'")?;
                let span = join(tok.span, close.span);
                let arr: [f64; 7] = nums.try_into().map_err(|v: Vec<f64>| {
                    self.diags.push(Diagnostic::error(
                        span,
                        format!(
                            "pose takes 7 numbers (px, py, pz, axis_x, axis_y, axis_z, angle_deg), found {}",
                            v.len()
                        ),
                    ));
                    Bail
                })?;
                Ok((Value::Pose(arr), span))
            }
            TokenKind::LBracket => {
                self.advance();
                let mut items = Vec::new();
                loop {
                    if self.at(&TokenKind::RBracket) {
                        break;
                    }
                    items.push(self.value()?);
                    if self.at(&TokenKind::Comma) {
                        self.advance();
                        continue;
                    }
                    break;
                }
                let close = self.expect(TokenKind::RBracket, "',' or ']'")?;
                Ok((Value::List(items), join(tok.span, close.span)))
            }
            _ => Err(self.error_here("value (string, number, pose or list)")),
        }
    }
}

fn join(a: Span, b: Span) -> Span {
    if a.line == b.line {
        Span::new(a.offset, a.line, a.column, b.column + b.length - a.column)
    } else {
        a
    }
}

/// Typed view over a property block that tracks which keys were consumed.
struct Props<'d> {
    props: Vec<Prop>,
    used: Vec<bool>,
    owner: String,
    owner_span: Span,
    diags: &'d mut Vec<Diagnostic>,
    failed: bool,
}

impl<'d> Props<'d> {
    fn new(props: Vec<Prop>, owner: String, owner_span: Span, diags: &'d mut Vec<Diagnostic>) -> Self {
        let used = vec![false; props.len()];
        Self {
            props,
            used,
            owner,
            owner_span,
            diags,
            failed: false,
        }
    }

    fn take(&mut self, key: &str) -> Option<(Value, Span)> {
        let i = self.props.iter().position(|p| p.key == key)?;
        self.used[i] = true;
        Some((self.props[i].value.clone(), self.props[i].value_span))
    }

    fn err(&mut self, span: Span, msg: String) {
        self.diags.push(Diagnostic::error(span, msg));
        self.failed = true;
    }

    fn missing(&mut self, key: &str) {
        let msg = format!("missing key '{key}' in {}", self.owner);
        let span = self.owner_span;
        self.err(span, msg);
    }

    fn mismatch(&mut self, key: &str, expected: &str, got: &Value, span: Span) {
        self.err(
            span,
            format!("key '{key}' expects {expected}, found {}", got.describe()),
        );
    }

    fn str_opt(&mut self, key: &str) -> Option<(String, Span)> {
        match self.take(key)? {
            (Value::Str(s), span) => Some((s, span)),
            (v, span) => {
                self.mismatch(key, "a string", &v, span);
                None
            }
        }
    }

    fn str_req(&mut self, key: &str) -> Option<(String, Span)> {
        if !self.props.iter().any(|p| p.key == key) {
            self.missing(key);
            return None;
        }
        self.str_opt(key)
    }

    fn num_opt(&mut self, key: &str) -> Option<(f64, Span)> {
        match self.take(key)? {
            (Value::Num(n), span) => Some((n, span)),
            (v, span) => {
                self.mismatch(key, "a number", &v, span);
                None
            }
        }
    }

    fn num_or(&mut self, key: &str, default: f64) -> f64 {
        self.num_opt(key).map_or(default, |(n, _)| n)
    }

    fn num_req(&mut self, key: &str) -> Option<(f64, Span)> {
        if !self.props.iter().any(|p| p.key == key) {
            self.missing(key);
            return None;
        }
        self.num_opt(key)
    }

    fn pose_opt(&mut self, key: &str) -> Option<PoseSpec> {
        match self.take(key)? {
            (Value::Pose(a), _) => Some(PoseSpec::from_array(a)),
            (v, span) => {
                self.mismatch(key, "a pose(...)", &v, span);
                None
            }
        }
    }

    fn pose_req(&mut self, key: &str) -> Option<PoseSpec> {
        if !self.props.iter().any(|p| p.key == key) {
            self.missing(key);
            return None;
        }
        self.pose_opt(key)
    }

    fn list_opt(&mut self, key: &str) -> Option<(Vec<(Value, Span)>, Span)> {
        match self.take(key)? {
            (Value::List(items), span) => Some((items, span)),
            (v, span) => {
                self.mismatch(key, "a list", &v, span);
                None
            }
        }
    }

    fn vec3_opt(&mut self, key: &str) -> Option<[f64; 3]> {
        let (items, span) = self.list_opt(key)?;
        let nums: Vec<f64> = items
            .iter()
            .filter_map(|(v, _)| match v {
                Value::Num(n) => Some(*n),
                _ => None,
            })
            .collect();
        if nums.len() != 3 || items.len() != 3 {
            self.err(span, format!("key '{key}' expects a list of 3 numbers"));
            return None;
        }
        Some([nums[0], nums[1], nums[2]])
    }

    fn vec3_req(&mut self, key: &str) -> Option<[f64; 3]> {
        if !self.props.iter().any(|p| p.key == key) {
            self.missing(key);
            return None;
        }
        self.vec3_opt(key)
    }

    fn asset_ref(&mut self, key: &str) -> Option<AssetRef> {
        self.str_req(key).map(|(name, span)| AssetRef {
            name,
            loc: Loc(span),
        })
    }

    /// Reports unconsumed keys; returns `true` if the block is usable.
    fn finish(mut self) -> bool {
        for i in 0..self.props.len() {
            if !self.used[i] {
                let msg = format!("unknown key '{}' in {}", self.props[i].key, self.owner);
                let span = self.props[i].key_span;
                self.err(span, msg);
            }
        }
        !self.failed
    }
}

fn interpret_asset(
    id: String,
    span: Span,
    props: Vec<Prop>,
    diags: &mut Vec<Diagnostic>,
) -> Option<AssetDef> {
    let mut p = Props::new(props, format!("asset '{id}'"), span, diags);
    let pose = p.pose_opt("pose").unwrap_or(PoseSpec::at([0.0, 0.0, 0.0]));

    let mut tags = BTreeSet::new();
    if let Some((items, _)) = p.list_opt("tags") {
        for (v, vspan) in items {
            match v {
                Value::Str(s) => match Tag::parse(&s) {
                    Some(t) => {
                        tags.insert(t);
                    }
                    None => p.err(vspan, format!("unknown tag '{s}'")),
                },
                other => p.mismatch("tags", "a list of strings", &other, vspan),
            }
        }
    }

    let narration = p.list_opt("narration").map(|(items, _)| {
        let mut lines = Vec::new();
        for (v, vspan) in items {
            match v {
                Value::List(pair) if pair.len() == 2 => match (&pair[0].0, &pair[1].0) {
                    (Value::Num(d), Value::Str(t)) => lines.push(NarrationLine {
                        delay_s: *d,
                        text: t.clone(),
                    }),
                    _ => p.err(vspan, "narration entries are [delay_seconds, \"text\"]".into()),
                },
                _ => p.err(vspan, "narration entries are [delay_seconds, \"text\"]".into()),
            }
        }
        lines
    });

    let narrator = p.str_opt("narrator").map(|(name, span)| AssetRef {
        name,
        loc: Loc(span),
    });

    let ik = p.list_opt("ik").and_then(|(items, span)| match items.as_slice() {
        [(Value::Num(a), _), (Value::Num(b), _)] => Some((*a, *b)),
        _ => {
            p.err(span, "key 'ik' expects [L1, L2]".into());
            None
        }
    });

    let grab = p.str_opt("grab").and_then(|(s, span)| match GrabMode::parse(&s) {
        Some(m) => Some(m),
        None => {
            p.err(span, format!("unknown grab mode '{s}' (velocity, parenting)"));
            None
        }
    });

    p.finish().then_some(AssetDef {
        id,
        loc: Loc(span),
        pose,
        tags,
        narration,
        narrator,
        ik,
        grab,
    })
}

fn interpret_action(
    id: String,
    span: Span,
    kind: Keyword,
    props: Vec<Prop>,
    diags: &mut Vec<Diagnostic>,
) -> Option<ActionDef> {
    let owner = format!("{} action '{id}'", kind.as_str());
    let mut p = Props::new(props, owner, span, diags);
    let kind = match kind {
        Keyword::Insert => {
            let interactable = p.asset_ref("interactable");
            let final_pose = p.pose_req("final");
            let hologram = p.str_req("hologram").map(|(s, _)| s);
            let aid_text = p.str_opt("aidline").map(|(s, _)| s);
            let anchor_span = p.props.iter().find(|x| x.key == "aidline_anchor").map(|x| x.key_span);
            let anchor = p.vec3_opt("aidline_anchor");
            if aid_text.is_none() {
                if let Some(s) = anchor_span {
                    p.err(s, "'aidline_anchor' requires 'aidline'".into());
                }
            }
            let aidline = aid_text.map(|text| Aidline { text, anchor });
            match (interactable, final_pose, hologram) {
                (Some(interactable), Some(final_pose), Some(hologram)) => Some(ActionKind::Insert {
                    interactable,
                    final_pose,
                    hologram,
                    aidline,
                }),
                _ => None,
            }
        }
        Keyword::Remove => {
            let target = p.asset_ref("target");
            let clearance_m = p.num_or("clearance", DEFAULT_CLEARANCE_M);
            target.map(|target| ActionKind::Remove {
                target,
                clearance_m,
            })
        }
        Keyword::Tool => {
            let tool = p.asset_ref("tool");
            let center = p.vec3_req("center");
            let radius = p.num_req("radius").map(|(n, _)| n);
            let required_active_s = p.num_or("duration", DEFAULT_TOOL_ACTIVE_S);
            match (tool, center, radius) {
                (Some(tool), Some(center), Some(radius)) => Some(ActionKind::Tool {
                    tool,
                    region: RegionSpec { center, radius },
                    required_active_s,
                }),
                _ => None,
            }
        }
        Keyword::Use => {
            let implement = p.asset_ref("implement");
            let center = p.vec3_req("center");
            let radius = p.num_req("radius").map(|(n, _)| n);
            let required_sweep_m = p.num_or("sweep", DEFAULT_SWEEP_M);
            match (implement, center, radius) {
                (Some(implement), Some(center), Some(radius)) => Some(ActionKind::Use {
                    implement,
                    region: RegionSpec { center, radius },
                    required_sweep_m,
                }),
                _ => None,
            }
        }
        Keyword::Quiz => {
            let question = p.str_req("question").map(|(s, _)| s);
            let choices = if p.props.iter().any(|x| x.key == "choices") {
                p.list_opt("choices").map(|(items, _)| {
                    let mut out = Vec::new();
                    for (v, vspan) in items {
                        match v {
                            Value::Str(label) => out.push(Choice { label, icon: None }),
                            Value::List(pair) => match pair.as_slice() {
                                [(Value::Str(label), _), (Value::Str(icon), ispan)] => out.push(Choice {
                                    label: label.clone(),
                                    icon: Some(AssetRef {
                                        name: icon.clone(),
                                        loc: Loc(*ispan),
                                    }),
                                }),
                                _ => p.err(vspan, "quiz choices are \"label\" or [\"label\", \"IconAsset\"]".into()),
                            },
                            _ => p.err(vspan, "quiz choices are \"label\" or [\"label\", \"IconAsset\"]".into()),
                        }
                    }
                    out
                })
            } else {
                p.missing("choices");
                None
            };
            let correct = p.num_req("correct").and_then(|(n, nspan)| {
                if n >= 0.0 && n.fract() == 0.0 && n < u32::MAX as f64 {
                    Some((n as usize, nspan))
                } else {
                    p.err(nspan, "key 'correct' expects a non-negative integer".into());
                    None
                }
            });
            match (question, choices, correct) {
                (Some(question), Some(choices), Some((correct, cspan))) => Some(ActionKind::Quiz {
                    question,
                    choices,
                    correct,
                    correct_loc: Loc(cspan),
                }),
                _ => None,
            }
        }
        _ => unreachable!("action kinds are checked by the parser"),
    };
    let ok = p.finish();
    match (ok, kind) {
        (true, Some(kind)) => Some(ActionDef {
            id,
            loc: Loc(span),
            kind,
        }),
        _ => None,
    }
}

/// Parses scenario text. Any error diagnostic fails the parse; all errors
/// found (lexical and syntactic) are returned together.
pub fn parse_scenario(source: &str) -> Result<ScenarioDoc, Vec<Diagnostic>> {
    let (tokens, lex_diags) = lex(source);
    let mut parser = Parser {
        tokens,
        pos: 0,
        diags: lex_diags,
    };
    let doc = parser.scenario();
    let mut diags = parser.diags;
    diags.sort_by_key(|d| (d.span.offset, d.span.length));
    match doc {
        Some(doc) if diags.is_empty() => Ok(doc),
        _ => Err(diags),
    }
}
