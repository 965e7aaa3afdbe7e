//! The interactive correction loop for one candidate object.
//!
//! A session generates questions (implications the candidate violates),
//! takes accept/reject verdicts from an expert, rewrites the candidate intent
//! on every accepted question and regenerates until nothing is left to ask.
//! Every step is appended to an event log; replaying the log rebuilds the
//! same session bit for bit.

use std::collections::{HashMap, HashSet};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::canonical_base::{canonical_base_within, CanonicalBase};
use crate::context::{AttributeSet, CandidateObject, FormalContext};
use crate::crucial::{incremental_questions, inspect_closure, max_intent_questions};
use crate::error::{Error, Result};
use crate::implications::{merge_by_premise, support, Implication, Polarity};
use crate::io::{parse_cxt, write_cxt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Closure,
    Base,
}

/// Which generator produced a question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    Closure,
    Base,
    /// Crucial implications of the complementary context. The premise lists
    /// attributes the object lacks and conclusion polarities are flipped.
    ComplementClosure,
    /// `A -> m` for an intent that no row contains.
    MaxIntentI1,
    /// `A \ {a} -> !a` for an intent that no row contains.
    MaxIntentI2,
    /// New after another object was committed to the same table.
    Incremental,
}

impl Origin {
    pub fn is_complemented(self) -> bool {
        self == Origin::ComplementClosure
    }

    pub fn is_max_intent(self) -> bool {
        matches!(self, Origin::MaxIntentI1 | Origin::MaxIntentI2)
    }

    fn rank(self) -> u8 {
        if self.is_max_intent() {
            1
        } else {
            0
        }
    }

    /// Badge shown next to questions that no row supports.
    pub fn badge(self) -> Option<&'static str> {
        self.is_max_intent().then_some("no supporting example, verify by hand")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Open,
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionState {
    Questioning,
    Clean,
    Committed,
    Aborted,
}

impl SessionState {
    pub fn as_str(self) -> &'static str {
        match self {
            SessionState::Questioning => "questioning",
            SessionState::Clean => "clean",
            SessionState::Committed => "committed",
            SessionState::Aborted => "aborted",
        }
    }
}

/// A literal spelled out with the attribute name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedLiteral {
    pub attribute: String,
    pub negated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub origin: Origin,
    /// Stored in the frame of its origin; see [`Origin::ComplementClosure`].
    pub implication: Implication,
    pub text: String,
    pub premise: Vec<NamedLiteral>,
    pub conclusion: Vec<NamedLiteral>,
    pub support_objects: Vec<String>,
    pub status: Status,
    pub round: usize,
}

impl Question {
    /// Renders `implication` against `ctx`, including its supporting objects.
    pub fn new(id: String, origin: Origin, implication: Implication, ctx: &FormalContext, round: usize) -> Self {
        let names = ctx.attribute_names();
        let flip = origin.is_complemented();
        let premise: Vec<NamedLiteral> = implication
            .premise()
            .iter()
            .map(|i| NamedLiteral {
                attribute: names[i].clone(),
                negated: flip,
            })
            .collect();
        let mut conclusion: Vec<NamedLiteral> = implication
            .literals()
            .map(|lit| NamedLiteral {
                attribute: names[lit.attribute.0].clone(),
                negated: (lit.polarity == Polarity::Negative) != flip,
            })
            .collect();
        conclusion.sort_by_key(|l| l.negated);
        let spell = |lits: &[NamedLiteral]| {
            lits.iter()
                .map(|l| if l.negated { format!("!{}", l.attribute) } else { l.attribute.clone() })
                .collect::<Vec<_>>()
                .join(", ")
        };
        let text = if premise.is_empty() {
            format!("-> {}", spell(&conclusion))
        } else {
            format!("{} -> {}", spell(&premise), spell(&conclusion))
        };
        let support_objects = if origin.is_max_intent() {
            Vec::new()
        } else if flip {
            let comp = ctx.complement();
            comp.object_names_of(&support(&comp, &implication)).into_iter().map(str::to_owned).collect()
        } else {
            ctx.object_names_of(&support(ctx, &implication)).into_iter().map(str::to_owned).collect()
        };
        Question {
            id,
            origin,
            implication,
            text,
            premise,
            conclusion,
            support_objects,
            status: Status::Open,
            round,
        }
    }

    fn frame(&self, intent: &AttributeSet) -> AttributeSet {
        if self.origin.is_complemented() {
            intent.complement()
        } else {
            intent.clone()
        }
    }

    pub fn is_respected_by(&self, intent: &AttributeSet) -> bool {
        self.implication.is_respected_by(&self.frame(intent))
    }

    /// The intent after applying this question's conclusion.
    pub fn correct(&self, intent: &AttributeSet) -> AttributeSet {
        let mut framed = self.frame(intent);
        framed.union_with(self.implication.positive());
        framed.difference_with(self.implication.negative());
        self.frame(&framed)
    }

    fn key(&self) -> (bool, Implication) {
        (self.origin.is_complemented(), self.implication.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub question_id: String,
    pub verdict: Verdict,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
    /// Set when an accepted question had no supporting row.
    #[serde(default)]
    pub unsupported_by_data: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub mode: Mode,
    pub use_complement: bool,
    /// Time budget for the canonical base in base mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_budget_ms: Option<u64>,
}

impl SessionConfig {
    pub fn new(mode: Mode, use_complement: bool) -> Self {
        SessionConfig {
            mode,
            use_complement,
            base_budget_ms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "kebab-case")]
pub enum Event {
    Open {
        context: String,
        object: String,
        attributes: Vec<String>,
        config: SessionConfig,
    },
    QuestionBatch {
        round: usize,
        questions: Vec<Question>,
    },
    Answer(Answer),
    Rebase {
        context: String,
        committed: Vec<CommittedObject>,
    },
    Commit {
        object: String,
        attributes: Vec<String>,
    },
}

/// An object added to the table after a session's snapshot was taken.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommittedObject {
    pub name: String,
    pub attributes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub seq: u64,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Debug, Clone)]
pub struct Session {
    snapshot: FormalContext,
    candidate: CandidateObject,
    config: SessionConfig,
    base: Option<CanonicalBase>,
    questions: Vec<Question>,
    answers: Vec<Answer>,
    rejected: HashSet<(bool, Implication)>,
    incremental_premises: Vec<AttributeSet>,
    round: usize,
    state: SessionState,
    next_id: usize,
    log: Vec<LogRecord>,
    diagnostic: Option<String>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

fn names_of(ctx: &FormalContext, set: &AttributeSet) -> Vec<String> {
    ctx.attribute_names_of(set).into_iter().map(str::to_owned).collect()
}

impl Session {
    pub fn open(ctx: FormalContext, candidate: CandidateObject, config: SessionConfig) -> Result<Session> {
        if candidate.intent.width() != ctx.num_attributes() {
            return Err(Error::WidthMismatch {
                expected: ctx.num_attributes(),
                actual: candidate.intent.width(),
            });
        }
        if ctx.object_index(&candidate.name).is_some() {
            return Err(Error::DuplicateObject(candidate.name));
        }
        let base = match config.mode {
            Mode::Base => Some(canonical_base_within(
                &ctx,
                config.base_budget_ms.map(Duration::from_millis),
            )?),
            Mode::Closure => None,
        };
        let open = Event::Open {
            context: write_cxt(&ctx),
            object: candidate.name.clone(),
            attributes: names_of(&ctx, &candidate.intent),
            config: config.clone(),
        };
        let mut session = Session {
            snapshot: ctx,
            candidate,
            config,
            base,
            questions: Vec::new(),
            answers: Vec::new(),
            rejected: HashSet::new(),
            incremental_premises: Vec::new(),
            round: 1,
            state: SessionState::Questioning,
            next_id: 1,
            log: Vec::new(),
            diagnostic: None,
        };
        session.record(open);
        session.regenerate();
        Ok(session)
    }

    pub fn snapshot(&self) -> &FormalContext {
        &self.snapshot
    }

    pub fn candidate(&self) -> &CandidateObject {
        &self.candidate
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn round(&self) -> usize {
        self.round
    }

    /// Every question asked so far, answered ones included.
    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn answers(&self) -> &[Answer] {
        &self.answers
    }

    pub fn log(&self) -> &[LogRecord] {
        &self.log
    }

    /// Why the session was aborted, if it was.
    pub fn diagnostic(&self) -> Option<&str> {
        self.diagnostic.as_deref()
    }

    pub fn intent_names(&self) -> Vec<String> {
        names_of(&self.snapshot, &self.candidate.intent)
    }

    /// Maximum number of accepted corrections before the session gives up.
    pub fn round_cap(&self) -> usize {
        2 * self.snapshot.num_attributes()
    }

    fn require(&self, expected: SessionState) -> Result<()> {
        if self.state == expected {
            Ok(())
        } else {
            Err(Error::WrongState {
                expected: expected.as_str(),
                actual: self.state.as_str(),
            })
        }
    }

    fn record(&mut self, event: Event) {
        let seq = self.log.len() as u64 + 1;
        self.log.push(LogRecord { seq, event });
    }

    /// Open questions: supported questions first, hand-check questions last,
    /// then by descending support and premise.
    pub fn next_questions(&self) -> Result<Vec<&Question>> {
        if self.state == SessionState::Clean {
            return Ok(Vec::new());
        }
        self.require(SessionState::Questioning)?;
        let mut open: Vec<&Question> = self.questions.iter().filter(|q| q.status == Status::Open).collect();
        open.sort_by_cached_key(|q| {
            (
                q.origin.rank(),
                std::cmp::Reverse(q.support_objects.len()),
                q.implication.premise().iter().collect::<Vec<_>>(),
            )
        });
        Ok(open)
    }

    fn generate(&self) -> Vec<(Origin, Implication)> {
        let intent = &self.candidate.intent;
        let mut out = Vec::new();
        match self.config.mode {
            Mode::Closure => {
                for imp in inspect_closure(&self.snapshot, intent).merged() {
                    let origin = if self.incremental_premises.contains(imp.premise()) {
                        Origin::Incremental
                    } else {
                        Origin::Closure
                    };
                    out.push((origin, imp));
                }
            }
            Mode::Base => {
                let base = self.base.as_ref().expect("base mode sessions hold a base");
                out.extend(base.inspect(intent).into_iter().map(|imp| (Origin::Base, imp)));
            }
        }
        if self.config.use_complement {
            let comp = self.snapshot.complement();
            for imp in inspect_closure(&comp, &intent.complement()).merged() {
                out.push((Origin::ComplementClosure, imp));
            }
        }
        if self.config.mode == Mode::Closure {
            let hand = max_intent_questions(&self.snapshot, intent);
            for imp in merge_by_premise(hand.additions) {
                out.push((Origin::MaxIntentI1, imp));
            }
            out.extend(hand.removals.into_iter().map(|imp| (Origin::MaxIntentI2, imp)));
        }
        out.retain(|(origin, imp)| !self.rejected.contains(&(origin.is_complemented(), imp.clone())));
        out
    }

    /// Replaces the open questions with a fresh batch for the current intent.
    fn regenerate(&mut self) {
        let previous: HashMap<(Origin, Implication), String> = self
            .questions
            .iter()
            .filter(|q| q.status == Status::Open)
            .map(|q| ((q.origin, q.implication.clone()), q.id.clone()))
            .collect();
        self.questions.retain(|q| q.status != Status::Open);
        let mut batch = Vec::new();
        for (origin, imp) in self.generate() {
            let id = match previous.get(&(origin, imp.clone())) {
                Some(id) => id.clone(),
                None => {
                    let id = format!("q{}", self.next_id);
                    self.next_id += 1;
                    id
                }
            };
            batch.push(Question::new(id, origin, imp, &self.snapshot, self.round));
        }
        self.state = if batch.is_empty() {
            SessionState::Clean
        } else {
            SessionState::Questioning
        };
        self.questions.extend(batch.iter().cloned());
        self.record(Event::QuestionBatch {
            round: self.round,
            questions: batch,
        });
    }

    pub fn answer(&mut self, question_id: &str, verdict: Verdict) -> Result<()> {
        self.answer_at(question_id, verdict, now_ms())
    }

    fn answer_at(&mut self, question_id: &str, verdict: Verdict, timestamp: u64) -> Result<()> {
        self.require(SessionState::Questioning)?;
        let index = self
            .questions
            .iter()
            .position(|q| q.id == question_id)
            .ok_or_else(|| Error::UnknownQuestion(question_id.to_owned()))?;
        if self.questions[index].status != Status::Open {
            return Err(Error::AlreadyAnswered(question_id.to_owned()));
        }
        let answer = Answer {
            question_id: question_id.to_owned(),
            verdict,
            timestamp,
            unsupported_by_data: verdict == Verdict::Accept && self.questions[index].support_objects.is_empty(),
        };
        self.answers.push(answer.clone());
        self.record(Event::Answer(answer));

        match verdict {
            Verdict::Reject => {
                self.questions[index].status = Status::Rejected;
                let key = self.questions[index].key();
                self.rejected.insert(key);
                if self.questions.iter().all(|q| q.status != Status::Open) {
                    self.state = SessionState::Clean;
                }
                Ok(())
            }
            Verdict::Accept => {
                self.questions[index].status = Status::Accepted;
                self.candidate.intent = self.questions[index].correct(&self.candidate.intent);
                self.round += 1;
                if self.round - 1 > self.round_cap() {
                    return Err(self.abort(Error::RoundCap(self.round_cap())));
                }
                self.enforce_accepted()?;
                self.regenerate();
                Ok(())
            }
        }
    }

    /// Re-applies earlier accepted questions that the latest correction
    /// undid.
    fn enforce_accepted(&mut self) -> Result<()> {
        let passes = 2 * self.snapshot.num_attributes() + 2;
        for _ in 0..passes {
            let violated = self
                .questions
                .iter()
                .find(|q| q.status == Status::Accepted && !q.is_respected_by(&self.candidate.intent));
            match violated {
                Some(q) => self.candidate.intent = q.correct(&self.candidate.intent),
                None => return Ok(()),
            }
        }
        Err(self.abort(Error::RoundCap(self.round_cap())))
    }

    fn abort(&mut self, err: Error) -> Error {
        self.state = SessionState::Aborted;
        self.diagnostic = Some(err.to_string());
        err
    }

    /// Adds the corrected candidate to the snapshot.
    pub fn commit(&mut self) -> Result<FormalContext> {
        self.require(SessionState::Clean)?;
        let next = self
            .snapshot
            .with_object(&self.candidate.name, self.candidate.intent.clone())?;
        self.state = SessionState::Committed;
        let event = Event::Commit {
            object: self.candidate.name.clone(),
            attributes: self.intent_names(),
        };
        self.record(event);
        Ok(next)
    }

    /// Moves the session onto a newer table that also contains `committed`
    /// (objects added since this session's snapshot, oldest first) and
    /// regenerates the open questions.
    pub fn rebase(&mut self, ctx: FormalContext, committed: &[CandidateObject]) -> Result<()> {
        if !matches!(self.state, SessionState::Questioning | SessionState::Clean) {
            return Err(Error::WrongState {
                expected: "questioning or clean",
                actual: self.state.as_str(),
            });
        }
        if ctx.attribute_names() != self.snapshot.attribute_names() {
            return Err(Error::Shape("rebase target has different attributes".into()));
        }
        if ctx.object_index(&self.candidate.name).is_some() {
            return Err(Error::DuplicateObject(self.candidate.name.clone()));
        }
        let mut grown = self.snapshot.clone();
        for object in committed {
            for imp in incremental_questions(&grown, &object.intent, &self.candidate.intent) {
                if !self.incremental_premises.contains(imp.premise()) {
                    self.incremental_premises.push(imp.premise().clone());
                }
            }
            grown = grown.with_object(&object.name, object.intent.clone())?;
        }
        if self.config.mode == Mode::Base {
            self.base = Some(canonical_base_within(
                &ctx,
                self.config.base_budget_ms.map(Duration::from_millis),
            )?);
        }
        let event = Event::Rebase {
            context: write_cxt(&ctx),
            committed: committed
                .iter()
                .map(|c| CommittedObject {
                    name: c.name.clone(),
                    attributes: names_of(&ctx, &c.intent),
                })
                .collect(),
        };
        self.snapshot = ctx;
        self.record(event);
        self.regenerate();
        Ok(())
    }

    /// Rebuilds a session from its event log and checks that every
    /// regenerated record matches the logged one.
    pub fn replay(records: &[LogRecord]) -> Result<Session> {
        let (first, rest) = records
            .split_first()
            .ok_or_else(|| Error::Log("empty log".into()))?;
        let mut session = match &first.event {
            Event::Open {
                context,
                object,
                attributes,
                config,
            } => {
                let ctx = parse_cxt(context)?;
                let intent = ctx.attribute_set(attributes)?;
                Session::open(
                    ctx,
                    CandidateObject {
                        name: object.clone(),
                        intent,
                    },
                    config.clone(),
                )?
            }
            _ => return Err(Error::Log("log does not start with an open event".into())),
        };
        for record in rest {
            match &record.event {
                Event::Open { .. } => return Err(Error::Log(format!("second open event at seq {}", record.seq))),
                Event::QuestionBatch { .. } => {}
                Event::Answer(answer) => {
                    match session.answer_at(&answer.question_id, answer.verdict, answer.timestamp) {
                        Ok(()) | Err(Error::RoundCap(_)) => {}
                        Err(err) => return Err(err),
                    }
                }
                Event::Rebase { context, committed } => {
                    let ctx = parse_cxt(context)?;
                    let committed = committed
                        .iter()
                        .map(|c| {
                            Ok(CandidateObject {
                                name: c.name.clone(),
                                intent: ctx.attribute_set(&c.attributes)?,
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    session.rebase(ctx, &committed)?;
                }
                Event::Commit { .. } => {
                    session.commit()?;
                }
            }
        }
        if let Some((ours, theirs)) = session.log.iter().zip(records).find(|(a, b)| a != b) {
            return Err(Error::Log(format!("replay diverged at seq {}", theirs.seq.min(ours.seq))));
        }
        if session.log.len() != records.len() {
            return Err(Error::Log(format!(
                "replay produced {} records, log has {}",
                session.log.len(),
                records.len()
            )));
        }
        Ok(session)
    }

    /// The event log as line-delimited JSON.
    pub fn log_jsonl(&self) -> String {
        to_jsonl(&self.log)
    }
}

pub fn to_jsonl(records: &[LogRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("log records serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_jsonl(text: &str) -> Result<Vec<LogRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}
