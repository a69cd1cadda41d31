//! A fixed list of actions, fired at set times or when a venue's quote reaches a price.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Ctx, Input, Names, Strategy};
use crate::order::{OrderKind, TimeInForce};
use crate::scenario::{strategy_err, ConfigError};
use crate::types::{OrderId, Price, Qty, Side, SimTime, VenueId};

fn limit() -> OrderKind {
    OrderKind::Limit
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedConfig {
    #[serde(default)]
    pub actions: Vec<ScriptStep>,
}

/// One action with exactly one of `at_us` or `when`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptStep {
    #[serde(default)]
    pub at_us: Option<u64>,
    #[serde(default)]
    pub when: Option<QuoteTrigger>,
    pub action: ScriptAction,
}

/// Fires once the agent sees `venue`'s best bid (for `buy`) at or above
/// `at_or_better`, or its best ask (for `sell`) at or below it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuoteTrigger {
    pub venue: String,
    pub side: Side,
    pub at_or_better: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "do", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScriptAction {
    New {
        #[serde(default)]
        label: Option<String>,
        venue: String,
        side: Side,
        #[serde(default = "limit")]
        kind: OrderKind,
        #[serde(default)]
        price: Option<u64>,
        qty: u64,
        #[serde(default)]
        tif: TimeInForce,
        #[serde(default)]
        anonymous: bool,
        #[serde(default)]
        route: bool,
    },
    Cancel {
        label: String,
    },
    Modify {
        label: String,
        #[serde(default)]
        price: Option<u64>,
        #[serde(default)]
        qty: Option<u64>,
    },
}

impl ScriptedConfig {
    pub(crate) fn validate(&self, names: &Names<'_>) -> Result<(), ConfigError> {
        let mut labels: Vec<&str> = Vec::new();
        for (i, step) in self.actions.iter().enumerate() {
            let path = format!("actions[{i}]");
            match (&step.at_us, &step.when) {
                (Some(_), None) => {}
                (None, Some(t)) => names.check(&format!("{path}.when.venue"), &t.venue)?,
                _ => return Err(strategy_err(&path, "needs exactly one of at_us or when")),
            }
            match &step.action {
                ScriptAction::New {
                    label,
                    venue,
                    kind,
                    price,
                    qty,
                    ..
                } => {
                    names.check(&format!("{path}.action.venue"), venue)?;
                    if *qty == 0 {
                        return Err(strategy_err(&format!("{path}.action.qty"), "must be positive"));
                    }
                    if kind.has_price() != price.is_some() {
                        let msg = "price is required for priced kinds and forbidden for market orders";
                        return Err(strategy_err(&format!("{path}.action.price"), msg));
                    }
                    if let Some(l) = label {
                        if labels.contains(&l.as_str()) {
                            return Err(strategy_err(&format!("{path}.action.label"), "duplicate label"));
                        }
                        labels.push(l);
                    }
                }
                ScriptAction::Cancel { label } | ScriptAction::Modify { label, .. } => {
                    if !labels.contains(&label.as_str()) {
                        let msg = format!("no earlier order labeled '{label}'");
                        return Err(strategy_err(&format!("{path}.action.label"), msg));
                    }
                }
            }
        }
        Ok(())
    }

    pub(crate) fn build(&self, names: &Names<'_>) -> Scripted {
        let steps = self
            .actions
            .iter()
            .map(|s| Step {
                at: s.at_us.map(SimTime),
                when: s
                    .when
                    .as_ref()
                    .map(|t| (names.venue(&t.venue), t.side, Price(t.at_or_better))),
                action: match &s.action {
                    ScriptAction::New {
                        label,
                        venue,
                        side,
                        kind,
                        price,
                        qty,
                        tif,
                        anonymous,
                        route,
                    } => Act::New {
                        label: label.clone(),
                        venue: names.venue(venue),
                        side: *side,
                        kind: *kind,
                        price: price.map(Price),
                        qty: Qty(*qty),
                        tif: *tif,
                        anonymous: *anonymous,
                        route: *route,
                    },
                    ScriptAction::Cancel { label } => Act::Cancel { label: label.clone() },
                    ScriptAction::Modify { label, price, qty } => Act::Modify {
                        label: label.clone(),
                        price: price.map(Price),
                        qty: qty.map(Qty),
                    },
                },
                fired: false,
            })
            .collect();
        Scripted {
            steps,
            labels: BTreeMap::new(),
        }
    }
}

enum Act {
    New {
        label: Option<String>,
        venue: VenueId,
        side: Side,
        kind: OrderKind,
        price: Option<Price>,
        qty: Qty,
        tif: TimeInForce,
        anonymous: bool,
        route: bool,
    },
    Cancel {
        label: String,
    },
    Modify {
        label: String,
        price: Option<Price>,
        qty: Option<Qty>,
    },
}

struct Step {
    at: Option<SimTime>,
    when: Option<(VenueId, Side, Price)>,
    action: Act,
    fired: bool,
}

pub(crate) struct Scripted {
    steps: Vec<Step>,
    labels: BTreeMap<String, (VenueId, OrderId)>,
}

impl Scripted {
    fn fire(&mut self, ctx: &mut Ctx<'_>, index: usize) {
        let step = &mut self.steps[index];
        if step.fired {
            return;
        }
        step.fired = true;
        match &step.action {
            Act::New {
                label,
                venue,
                side,
                kind,
                price,
                qty,
                tif,
                anonymous,
                route,
            } => {
                let order = ctx
                    .order(*venue, *side, *kind, *price, *qty)
                    .with_tif(*tif)
                    .with_anonymous(*anonymous);
                if let (Some(id), Some(l)) = (ctx.submit(order, *route), label) {
                    self.labels.insert(l.clone(), (*venue, id));
                }
            }
            Act::Cancel { label } => {
                if let Some(&(venue, id)) = self.labels.get(label) {
                    ctx.cancel(venue, id);
                }
            }
            Act::Modify { label, price, qty } => {
                if let Some(&(venue, id)) = self.labels.get(label) {
                    ctx.modify(venue, id, *price, *qty);
                }
            }
        }
    }
}

impl Strategy for Scripted {
    fn on(&mut self, ctx: &mut Ctx<'_>, input: Input<'_>) {
        match input {
            Input::Start => {
                for (i, s) in self.steps.iter().enumerate() {
                    if let Some(at) = s.at {
                        ctx.timer(at, i as u64);
                    }
                }
            }
            Input::Timer(tag) => self.fire(ctx, tag as usize),
            Input::Market(_) => {
                for i in 0..self.steps.len() {
                    let Some((venue, side, level)) = self.steps[i].when else {
                        continue;
                    };
                    let Some(l1) = ctx.view.l1(venue, ctx.instrument) else {
                        continue;
                    };
                    let hit = match side {
                        Side::Buy => l1.bid.is_some_and(|q| q.price >= level),
                        Side::Sell => l1.ask.is_some_and(|q| q.price <= level),
                    };
                    if hit {
                        self.fire(ctx, i);
                    }
                }
            }
            Input::Signal(_) | Input::Report(_) => {}
        }
    }
}
