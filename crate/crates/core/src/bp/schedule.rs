use crate::mrf::{MrfModel, Topology};

/// One directional pass over a model's messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pass {
    /// Grid: every row, messages `(r, c) -> (r, c + 1)` for ascending `c`.
    LeftToRight,
    /// Grid: every row, messages `(r, c) -> (r, c - 1)` for descending `c`.
    RightToLeft,
    /// Grid: every column, messages `(r, c) -> (r + 1, c)` for ascending `r`.
    TopToBottom,
    /// Grid: every column, messages `(r, c) -> (r - 1, c)` for descending `r`.
    BottomToTop,
    /// Any graph: message `a -> b` of each edge `(a, b)`, in edge order.
    EdgesForward,
    /// Any graph: message `b -> a` of each edge `(a, b)`, in reverse edge order.
    EdgesBackward,
}

impl Pass {
    pub fn is_grid_pass(self) -> bool {
        !matches!(self, Pass::EdgesForward | Pass::EdgesBackward)
    }
}

/// The ordered passes that make up one sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSchedule {
    passes: Vec<Pass>,
}

impl SweepSchedule {
    pub fn new(passes: Vec<Pass>) -> Self {
        Self { passes }
    }

    /// Left, right, up, down.
    pub fn grid() -> Self {
        Self::new(vec![
            Pass::LeftToRight,
            Pass::RightToLeft,
            Pass::TopToBottom,
            Pass::BottomToTop,
        ])
    }

    pub fn edge_order() -> Self {
        Self::new(vec![Pass::EdgesForward, Pass::EdgesBackward])
    }

    /// The canonical schedule for the model's topology.
    pub fn for_model(model: &MrfModel) -> Self {
        match model.topology() {
            Topology::Grid { .. } => Self::grid(),
            Topology::Generic => Self::edge_order(),
        }
    }

    pub fn passes(&self) -> &[Pass] {
        &self.passes
    }
}
