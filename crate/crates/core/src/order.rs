//! Order state and the type-specific display rules.

use serde::{Deserialize, Serialize};

use crate::types::{InstrumentId, OrderId, ParticipantId, Price, Qty, Side, SimTime, VenueId};

/// How a reserve order refills its displayed slice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Replenish {
    /// Refill up to the configured display size.
    Fixed,
    /// Refill to a size drawn uniformly from `[round_lot, display_size]`.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum OrderKind {
    Market,
    Limit,
    Reserve { display_size: Qty, replenish: Replenish },
    Discretionary { range: u64 },
    Hidden,
    HideAndLight,
    DayIso,
}

impl OrderKind {
    pub fn has_price(&self) -> bool {
        !matches!(self, OrderKind::Market)
    }

    pub fn name(&self) -> &'static str {
        match self {
            OrderKind::Market => "market",
            OrderKind::Limit => "limit",
            OrderKind::Reserve { .. } => "reserve",
            OrderKind::Discretionary { .. } => "discretionary",
            OrderKind::Hidden => "hidden",
            OrderKind::HideAndLight => "hide_and_light",
            OrderKind::DayIso => "day_iso",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state")]
pub enum DisplayState {
    Displayed,
    Hidden,
    /// Displayed one tick away from a locking price; `original_price` is restored on unlock.
    Slid {
        original_price: Price,
    },
}

/// Queue class inside a price level. Lit orders always rank ahead of hidden ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisplayClass {
    Lit,
    Hidden,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeInForce {
    #[default]
    Day,
    Ioc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Order {
    pub id: OrderId,
    pub participant: ParticipantId,
    pub venue: VenueId,
    pub instrument: InstrumentId,
    pub side: Side,
    pub kind: OrderKind,
    /// Current book price. `None` only for market orders.
    pub limit_price: Option<Price>,
    pub total_qty: Qty,
    pub open_qty: Qty,
    pub displayed_qty: Qty,
    pub anonymous: bool,
    pub claimed_submit_ts: SimTime,
    pub entry_ts: SimTime,
    pub entry_seq: u64,
    pub display_state: DisplayState,
    pub tif: TimeInForce,
    /// Set on the first day ISO resting at a level; ranks it at the head of the lit class.
    pub head_of_class: bool,
}

impl Order {
    /// Fresh order with its full quantity open and the kind's default display.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: OrderId,
        participant: ParticipantId,
        venue: VenueId,
        instrument: InstrumentId,
        side: Side,
        kind: OrderKind,
        limit_price: Option<Price>,
        qty: Qty,
    ) -> Order {
        let mut order = Order {
            id,
            participant,
            venue,
            instrument,
            side,
            kind,
            limit_price,
            total_qty: qty,
            open_qty: qty,
            displayed_qty: Qty::ZERO,
            anonymous: false,
            claimed_submit_ts: SimTime::ZERO,
            entry_ts: SimTime::ZERO,
            entry_seq: 0,
            display_state: DisplayState::Displayed,
            tif: TimeInForce::Day,
            head_of_class: false,
        };
        if matches!(kind, OrderKind::Hidden) {
            order.display_state = DisplayState::Hidden;
        }
        order.reset_display();
        order
    }

    pub fn with_tif(mut self, tif: TimeInForce) -> Order {
        self.tif = tif;
        self
    }

    pub fn with_anonymous(mut self, anonymous: bool) -> Order {
        self.anonymous = anonymous;
        self
    }

    pub fn with_claimed_submit_ts(mut self, ts: SimTime) -> Order {
        self.claimed_submit_ts = ts;
        self
    }

    pub fn display_class(&self) -> DisplayClass {
        match self.display_state {
            DisplayState::Hidden => DisplayClass::Hidden,
            DisplayState::Displayed | DisplayState::Slid { .. } => DisplayClass::Lit,
        }
    }

    /// Quantity a counterparty can trade against right now.
    pub fn executable_qty(&self) -> Qty {
        match self.display_class() {
            DisplayClass::Lit => self.displayed_qty,
            DisplayClass::Hidden => self.open_qty,
        }
    }

    /// Quantity shown in market data.
    pub fn visible_qty(&self) -> Qty {
        match self.display_class() {
            DisplayClass::Lit => self.displayed_qty,
            DisplayClass::Hidden => Qty::ZERO,
        }
    }

    pub fn reserve_qty(&self) -> Qty {
        self.open_qty.saturating_sub(self.displayed_qty)
    }

    /// Recomputes `displayed_qty` from `open_qty` without drawing a new reserve slice.
    pub(crate) fn reset_display(&mut self) {
        self.displayed_qty = match (self.kind, self.display_state) {
            (_, DisplayState::Hidden) => Qty::ZERO,
            (OrderKind::Reserve { display_size, .. }, _) => self.open_qty.min(display_size),
            _ => self.open_qty,
        };
    }

    pub(crate) fn apply_fill(&mut self, qty: Qty) {
        debug_assert!(qty <= self.open_qty);
        self.open_qty -= qty;
        self.displayed_qty = self.displayed_qty.saturating_sub(qty).min(self.open_qty);
    }

    pub fn is_filled(&self) -> bool {
        self.open_qty.is_zero()
    }

    pub fn is_marketable_against(&self, price: Price) -> bool {
        match self.limit_price {
            None => true,
            Some(limit) => self.side.accepts(limit, price),
        }
    }

    /// Original limit for slid orders, current price otherwise.
    pub fn intended_price(&self) -> Option<Price> {
        match self.display_state {
            DisplayState::Slid { original_price } => Some(original_price),
            _ => self.limit_price,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(kind: OrderKind, qty: u64) -> Order {
        Order::new(
            OrderId(1),
            ParticipantId(1),
            VenueId(0),
            InstrumentId(0),
            Side::Buy,
            kind,
            Some(Price(100)),
            Qty(qty),
        )
    }

    #[test]
    fn hidden_orders_display_nothing() {
        let o = order(OrderKind::Hidden, 500);
        assert_eq!(o.displayed_qty, Qty::ZERO);
        assert_eq!(o.visible_qty(), Qty::ZERO);
        assert_eq!(o.executable_qty(), Qty(500));
        assert_eq!(o.display_class(), DisplayClass::Hidden);
    }

    #[test]
    fn reserve_displays_at_most_display_size() {
        let o = order(
            OrderKind::Reserve {
                display_size: Qty(100),
                replenish: Replenish::Fixed,
            },
            520,
        );
        assert_eq!(o.displayed_qty, Qty(100));
        assert_eq!(o.reserve_qty(), Qty(420));
    }

    #[test]
    fn fill_reduces_open_and_displayed() {
        let mut o = order(OrderKind::Limit, 100);
        o.apply_fill(Qty(30));
        assert_eq!((o.open_qty, o.displayed_qty), (Qty(70), Qty(70)));
    }
}
