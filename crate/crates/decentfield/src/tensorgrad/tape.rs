use super::{Activation, Error, ParamVector};

/// Handle to a tape node. Values are row-major `rows x cols` matrices; most
/// compositor quantities are `n x 1` or `n x 3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

/// Handle to a parameter block registered on a tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamId(usize);

enum Op {
    Leaf,
    Const,
    /// `y = x W^T + b` with `W, b` taken from layer `layer` of param `p`.
    Affine { p: usize, layer: usize, x: usize },
    Act { kind: Activation, x: usize },
    Add { a: usize, b: usize },
    Sub { a: usize, b: usize },
    Mul { a: usize, b: usize },
    /// Rows of `a` scaled by the `n x 1` column `s`.
    MulBc { a: usize, s: usize },
    /// Rows of `a` divided by the `n x 1` column `s`.
    DivBc { a: usize, s: usize },
    Scale { a: usize, k: f64 },
    AddScalar { a: usize, k: f64 },
    Exp { a: usize },
    Square { a: usize },
    SumAll { a: usize },
    /// Per-segment row sums: `(n/seg) x c` from `n x c`.
    SegSum { a: usize, seg: usize },
    /// Per-segment exclusive cumulative product of an `n x 1` column.
    SegCumprodExcl { a: usize, seg: usize },
    SliceCols { a: usize, start: usize, len: usize },
    /// Rows `[const_block_row | emb_row(indices[n])]`; the embedding table is
    /// a leaf node, so its rows stay differentiable.
    AssembleRows { consts: Vec<f64>, const_cols: usize, emb: usize, indices: Vec<u32> },
}

struct Node {
    op: Op,
    off: usize,
    rows: usize,
    cols: usize,
}

struct ParamEntry {
    pv: ParamVector,
    grad: Vec<f64>,
    offsets: Vec<usize>,
    frozen: bool,
}

/// Reverse-mode tape over matrix-valued nodes. Values are computed eagerly as
/// ops are recorded; `backward` walks the record once and accumulates exact
/// adjoints into the node arena and registered parameter blocks.
pub struct Tape {
    nodes: Vec<Node>,
    vals: Vec<f64>,
    adj: Vec<f64>,
    params: Vec<ParamEntry>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self { nodes: Vec::new(), vals: Vec::new(), adj: Vec::new(), params: Vec::new() }
    }

    /// Registers a differentiable parameter block (copied in).
    pub fn param(&mut self, pv: &ParamVector) -> ParamId {
        self.push_param(pv, false)
    }

    /// Registers a parameter block whose gradient is not accumulated.
    pub fn frozen_param(&mut self, pv: &ParamVector) -> ParamId {
        self.push_param(pv, true)
    }

    fn push_param(&mut self, pv: &ParamVector, frozen: bool) -> ParamId {
        let mut offsets = Vec::with_capacity(pv.shapes().len());
        let mut off = 0;
        for s in pv.shapes() {
            offsets.push(off);
            off += s.len();
        }
        self.params.push(ParamEntry {
            pv: pv.clone(),
            grad: vec![0.0; pv.len()],
            offsets,
            frozen,
        });
        ParamId(self.params.len() - 1)
    }

    fn push(&mut self, op: Op, rows: usize, cols: usize) -> Var {
        let off = self.vals.len();
        self.vals.resize(off + rows * cols, 0.0);
        self.nodes.push(Node { op, off, rows, cols });
        Var(self.nodes.len() - 1)
    }

    pub fn rows(&self, v: Var) -> usize {
        self.nodes[v.0].rows
    }

    pub fn cols(&self, v: Var) -> usize {
        self.nodes[v.0].cols
    }

    pub fn value(&self, v: Var) -> &[f64] {
        let n = &self.nodes[v.0];
        &self.vals[n.off..n.off + n.rows * n.cols]
    }

    pub fn value_scalar(&self, v: Var) -> f64 {
        self.value(v)[0]
    }

    fn val_mut(&mut self, idx: usize) -> &mut [f64] {
        let n = &self.nodes[idx];
        &mut self.vals[n.off..n.off + n.rows * n.cols]
    }

    /// Differentiable leaf; its gradient is readable after `backward`.
    pub fn leaf(&mut self, data: &[f64], rows: usize, cols: usize) -> Result<Var, Error> {
        self.input(Op::Leaf, data, rows, cols)
    }

    pub fn constant(&mut self, data: &[f64], rows: usize, cols: usize) -> Result<Var, Error> {
        self.input(Op::Const, data, rows, cols)
    }

    fn input(&mut self, op: Op, data: &[f64], rows: usize, cols: usize) -> Result<Var, Error> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "input data length {} != {rows}x{cols}",
                data.len()
            )));
        }
        let v = self.push(op, rows, cols);
        self.val_mut(v.0).copy_from_slice(data);
        Ok(v)
    }

    pub fn affine(&mut self, p: ParamId, layer: usize, x: Var) -> Result<Var, Error> {
        let entry = &self.params[p.0];
        if layer >= entry.pv.shapes().len() {
            return Err(Error::ShapeMismatch(format!("layer {layer} out of range")));
        }
        let shape = entry.pv.shapes()[layer];
        let (rows, cols) = (shape.rows as usize, shape.cols as usize);
        let xn = &self.nodes[x.0];
        if xn.cols != cols {
            return Err(Error::ShapeMismatch(format!(
                "affine input has {} cols, layer wants {cols}",
                xn.cols
            )));
        }
        let n = xn.rows;
        let v = self.push(Op::Affine { p: p.0, layer, x: x.0 }, n, rows);
        let (w, b) = self.params[p.0].pv.layer(layer);
        // Split borrows: x values live before v's slot in the arena.
        let (xs_off, v_off) = (self.nodes[x.0].off, self.nodes[v.0].off);
        let (head, tail) = self.vals.split_at_mut(v_off);
        let xs = &head[xs_off..xs_off + n * cols];
        let ys = &mut tail[..n * rows];
        for i in 0..n {
            let xrow = &xs[i * cols..(i + 1) * cols];
            let yrow = &mut ys[i * rows..(i + 1) * rows];
            for r in 0..rows {
                let wrow = &w[r * cols..(r + 1) * cols];
                let mut acc = 0.0;
                for c in 0..cols {
                    acc += wrow[c] * xrow[c];
                }
                yrow[r] = acc;
            }
            if let Some(b) = b {
                for r in 0..rows {
                    yrow[r] += b[r];
                }
            }
        }
        Ok(v)
    }

    pub fn act(&mut self, kind: Activation, x: Var) -> Var {
        let (rows, cols) = (self.nodes[x.0].rows, self.nodes[x.0].cols);
        let v = self.push(Op::Act { kind, x: x.0 }, rows, cols);
        let (x_off, v_off) = (self.nodes[x.0].off, self.nodes[v.0].off);
        let (head, tail) = self.vals.split_at_mut(v_off);
        let xs = &head[x_off..x_off + rows * cols];
        for (y, &x) in tail[..rows * cols].iter_mut().zip(xs) {
            *y = kind.apply(x);
        }
        v
    }

    fn binary(
        &mut self,
        a: Var,
        b: Var,
        make: impl FnOnce(usize, usize) -> Op,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Var, Error> {
        let (an, bn) = (&self.nodes[a.0], &self.nodes[b.0]);
        if an.rows != bn.rows || an.cols != bn.cols {
            return Err(Error::ShapeMismatch(format!(
                "elementwise op on {}x{} vs {}x{}",
                an.rows, an.cols, bn.rows, bn.cols
            )));
        }
        let (rows, cols) = (an.rows, an.cols);
        let v = self.push(make(a.0, b.0), rows, cols);
        let (a_off, b_off, v_off) =
            (self.nodes[a.0].off, self.nodes[b.0].off, self.nodes[v.0].off);
        let (head, tail) = self.vals.split_at_mut(v_off);
        for i in 0..rows * cols {
            tail[i] = f(head[a_off + i], head[b_off + i]);
        }
        Ok(v)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, Error> {
        self.binary(a, b, |a, b| Op::Add { a, b }, |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, Error> {
        self.binary(a, b, |a, b| Op::Sub { a, b }, |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, Error> {
        self.binary(a, b, |a, b| Op::Mul { a, b }, |x, y| x * y)
    }

    fn broadcast(
        &mut self,
        a: Var,
        s: Var,
        make: impl FnOnce(usize, usize) -> Op,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Var, Error> {
        let (an, sn) = (&self.nodes[a.0], &self.nodes[s.0]);
        if sn.cols != 1 || sn.rows != an.rows {
            return Err(Error::ShapeMismatch(format!(
                "broadcast column is {}x{}, want {}x1",
                sn.rows, sn.cols, an.rows
            )));
        }
        let (rows, cols) = (an.rows, an.cols);
        let v = self.push(make(a.0, s.0), rows, cols);
        let (a_off, s_off, v_off) =
            (self.nodes[a.0].off, self.nodes[s.0].off, self.nodes[v.0].off);
        let (head, tail) = self.vals.split_at_mut(v_off);
        for i in 0..rows {
            let sv = head[s_off + i];
            for c in 0..cols {
                tail[i * cols + c] = f(head[a_off + i * cols + c], sv);
            }
        }
        Ok(v)
    }

    pub fn mul_bc(&mut self, a: Var, s: Var) -> Result<Var, Error> {
        self.broadcast(a, s, |a, s| Op::MulBc { a, s }, |x, s| x * s)
    }

    pub fn div_bc(&mut self, a: Var, s: Var) -> Result<Var, Error> {
        self.broadcast(a, s, |a, s| Op::DivBc { a, s }, |x, s| x / s)
    }

    fn unary(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let (rows, cols) = (self.nodes[a.0].rows, self.nodes[a.0].cols);
        let v = self.push(op, rows, cols);
        let (a_off, v_off) = (self.nodes[a.0].off, self.nodes[v.0].off);
        let (head, tail) = self.vals.split_at_mut(v_off);
        for i in 0..rows * cols {
            tail[i] = f(head[a_off + i]);
        }
        v
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        self.unary(a, Op::Scale { a: a.0, k }, |x| k * x)
    }

    pub fn add_scalar(&mut self, a: Var, k: f64) -> Var {
        self.unary(a, Op::AddScalar { a: a.0, k }, |x| x + k)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, Op::Exp { a: a.0 }, f64::exp)
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.unary(a, Op::Square { a: a.0 }, |x| x * x)
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let v = self.push(Op::SumAll { a: a.0 }, 1, 1);
        let (a_off, a_len) = {
            let n = &self.nodes[a.0];
            (n.off, n.rows * n.cols)
        };
        let total: f64 = self.vals[a_off..a_off + a_len].iter().sum();
        let v_off = self.nodes[v.0].off;
        self.vals[v_off] = total;
        v
    }

    pub fn mean_all(&mut self, a: Var) -> Var {
        let len = (self.nodes[a.0].rows * self.nodes[a.0].cols) as f64;
        let s = self.sum_all(a);
        self.scale(s, 1.0 / len)
    }

    pub fn seg_sum(&mut self, a: Var, seg: usize) -> Result<Var, Error> {
        let (rows, cols) = (self.nodes[a.0].rows, self.nodes[a.0].cols);
        if seg == 0 || rows % seg != 0 {
            return Err(Error::ShapeMismatch(format!("{rows} rows not divisible by segment {seg}")));
        }
        let v = self.push(Op::SegSum { a: a.0, seg }, rows / seg, cols);
        let (a_off, v_off) = (self.nodes[a.0].off, self.nodes[v.0].off);
        let (head, tail) = self.vals.split_at_mut(v_off);
        for s in 0..rows / seg {
            for c in 0..cols {
                let mut acc = 0.0;
                for i in 0..seg {
                    acc += head[a_off + (s * seg + i) * cols + c];
                }
                tail[s * cols + c] = acc;
            }
        }
        Ok(v)
    }

    /// Exclusive running product within each segment of an `n x 1` column:
    /// out[0] = 1, out[i] = out[i-1] * in[i-1]. Used for transmittance.
    pub fn seg_cumprod_excl(&mut self, a: Var, seg: usize) -> Result<Var, Error> {
        let (rows, cols) = (self.nodes[a.0].rows, self.nodes[a.0].cols);
        if cols != 1 {
            return Err(Error::ShapeMismatch("cumprod expects an n x 1 column".into()));
        }
        if seg == 0 || rows % seg != 0 {
            return Err(Error::ShapeMismatch(format!("{rows} rows not divisible by segment {seg}")));
        }
        let v = self.push(Op::SegCumprodExcl { a: a.0, seg }, rows, 1);
        let (a_off, v_off) = (self.nodes[a.0].off, self.nodes[v.0].off);
        let (head, tail) = self.vals.split_at_mut(v_off);
        for s in 0..rows / seg {
            let base = s * seg;
            let mut run = 1.0;
            for i in 0..seg {
                tail[base + i] = run;
                run *= head[a_off + base + i];
            }
        }
        Ok(v)
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Result<Var, Error> {
        let (rows, cols) = (self.nodes[a.0].rows, self.nodes[a.0].cols);
        if start + len > cols {
            return Err(Error::ShapeMismatch(format!(
                "slice {start}..{} out of {cols} cols",
                start + len
            )));
        }
        let v = self.push(Op::SliceCols { a: a.0, start, len }, rows, len);
        let (a_off, v_off) = (self.nodes[a.0].off, self.nodes[v.0].off);
        let (head, tail) = self.vals.split_at_mut(v_off);
        for i in 0..rows {
            tail[i * len..(i + 1) * len]
                .copy_from_slice(&head[a_off + i * cols + start..a_off + i * cols + start + len]);
        }
        Ok(v)
    }

    /// Builds the MLP input matrix: row `n` is `[consts_row_n | emb_row]`
    /// where `emb_row` is row `indices[n]` of the leaf table `emb`. An empty
    /// embedding table (0 cols) passes the constant block through unchanged.
    pub fn assemble_rows(
        &mut self,
        consts: &[f64],
        const_cols: usize,
        emb: Var,
        indices: &[u32],
    ) -> Result<Var, Error> {
        let n = indices.len();
        if consts.len() != n * const_cols {
            return Err(Error::ShapeMismatch(format!(
                "constant block {} != {n}x{const_cols}",
                consts.len()
            )));
        }
        let en = &self.nodes[emb.0];
        if !matches!(en.op, Op::Leaf) {
            return Err(Error::ShapeMismatch("embedding table must be a leaf".into()));
        }
        let emb_dim = en.cols;
        if let Some(&bad) = indices.iter().find(|&&i| i as usize >= en.rows.max(1)) {
            if emb_dim > 0 {
                return Err(Error::ShapeMismatch(format!("embedding index {bad} out of range")));
            }
        }
        let cols = const_cols + emb_dim;
        let v = self.push(
            Op::AssembleRows {
                consts: consts.to_vec(),
                const_cols,
                emb: emb.0,
                indices: indices.to_vec(),
            },
            n,
            cols,
        );
        let (e_off, v_off) = (self.nodes[emb.0].off, self.nodes[v.0].off);
        let (head, tail) = self.vals.split_at_mut(v_off);
        for (i, &ei) in indices.iter().enumerate() {
            tail[i * cols..i * cols + const_cols]
                .copy_from_slice(&consts[i * const_cols..(i + 1) * const_cols]);
            if emb_dim > 0 {
                let er = &head[e_off + ei as usize * emb_dim..e_off + (ei as usize + 1) * emb_dim];
                tail[i * cols + const_cols..(i + 1) * cols].copy_from_slice(er);
            }
        }
        Ok(v)
    }

    /// Accumulates adjoints of every node and parameter reachable from
    /// `root`, which must be a scalar.
    pub fn backward(&mut self, root: Var) -> Result<(), Error> {
        let rn = &self.nodes[root.0];
        if rn.rows * rn.cols != 1 {
            return Err(Error::ShapeMismatch(format!(
                "backward root must be scalar, got {}x{}",
                rn.rows, rn.cols
            )));
        }
        self.adj.clear();
        self.adj.resize(self.vals.len(), 0.0);
        self.adj[rn.off] = 1.0;

        for idx in (0..=root.0).rev() {
            let (off, rows, cols) = {
                let n = &self.nodes[idx];
                (n.off, n.rows, n.cols)
            };
            let len = rows * cols;
            match &self.nodes[idx].op {
                Op::Leaf | Op::Const => {}
                Op::Affine { p, layer, x } => {
                    let (p, layer, x) = (*p, *layer, *x);
                    let x_off = self.nodes[x].off;
                    let in_cols = self.nodes[x].cols;
                    let shape = self.params[p].pv.shapes()[layer];
                    let (w_rows, w_cols) = (shape.rows as usize, shape.cols as usize);
                    let l_off = self.params[p].offsets[layer];
                    let frozen = self.params[p].frozen;
                    // Inputs always precede their consumers in the arena, so
                    // dy and dx live on opposite sides of this split.
                    let (dx_side, dy_side) = self.adj.split_at_mut(off);
                    let dy_all = &dy_side[..len];
                    let entry = &mut self.params[p];
                    let w = &entry.pv.data()[l_off..l_off + w_rows * w_cols];
                    for i in 0..rows {
                        let dy = &dy_all[i * w_rows..(i + 1) * w_rows];
                        let xr = x_off + i * in_cols;
                        if !frozen {
                            for (r, &g) in dy.iter().enumerate() {
                                if g != 0.0 {
                                    let xrow = &self.vals[xr..xr + w_cols];
                                    let wg = &mut entry.grad
                                        [l_off + r * w_cols..l_off + (r + 1) * w_cols];
                                    for c in 0..w_cols {
                                        wg[c] += g * xrow[c];
                                    }
                                }
                            }
                            if shape.has_bias {
                                let b_off = l_off + w_rows * w_cols;
                                for (r, &g) in dy.iter().enumerate() {
                                    entry.grad[b_off + r] += g;
                                }
                            }
                        }
                        let dx = &mut dx_side[xr..xr + w_cols];
                        for (r, &g) in dy.iter().enumerate() {
                            if g != 0.0 {
                                let wrow = &w[r * w_cols..(r + 1) * w_cols];
                                for c in 0..w_cols {
                                    dx[c] += g * wrow[c];
                                }
                            }
                        }
                    }
                }
                Op::Act { kind, x } => {
                    let (kind, x) = (*kind, *x);
                    let x_off = self.nodes[x].off;
                    for i in 0..len {
                        let g = self.adj[off + i];
                        if g != 0.0 {
                            let d = kind.derivative(self.vals[x_off + i], self.vals[off + i]);
                            self.adj[x_off + i] += g * d;
                        }
                    }
                }
                Op::Add { a, b } => {
                    let (a_off, b_off) = (self.nodes[*a].off, self.nodes[*b].off);
                    for i in 0..len {
                        let g = self.adj[off + i];
                        self.adj[a_off + i] += g;
                        self.adj[b_off + i] += g;
                    }
                }
                Op::Sub { a, b } => {
                    let (a_off, b_off) = (self.nodes[*a].off, self.nodes[*b].off);
                    for i in 0..len {
                        let g = self.adj[off + i];
                        self.adj[a_off + i] += g;
                        self.adj[b_off + i] -= g;
                    }
                }
                Op::Mul { a, b } => {
                    let (a_off, b_off) = (self.nodes[*a].off, self.nodes[*b].off);
                    for i in 0..len {
                        let g = self.adj[off + i];
                        if g != 0.0 {
                            self.adj[a_off + i] += g * self.vals[b_off + i];
                            self.adj[b_off + i] += g * self.vals[a_off + i];
                        }
                    }
                }
                Op::MulBc { a, s } => {
                    let (a_off, s_off) = (self.nodes[*a].off, self.nodes[*s].off);
                    for i in 0..rows {
                        let sv = self.vals[s_off + i];
                        let mut ds = 0.0;
                        for c in 0..cols {
                            let g = self.adj[off + i * cols + c];
                            self.adj[a_off + i * cols + c] += g * sv;
                            ds += g * self.vals[a_off + i * cols + c];
                        }
                        self.adj[s_off + i] += ds;
                    }
                }
                Op::DivBc { a, s } => {
                    let (a_off, s_off) = (self.nodes[*a].off, self.nodes[*s].off);
                    for i in 0..rows {
                        let sv = self.vals[s_off + i];
                        let mut ds = 0.0;
                        for c in 0..cols {
                            let g = self.adj[off + i * cols + c];
                            self.adj[a_off + i * cols + c] += g / sv;
                            ds += g * self.vals[off + i * cols + c];
                        }
                        self.adj[s_off + i] -= ds / sv;
                    }
                }
                Op::Scale { a, k } => {
                    let (a_off, k) = (self.nodes[*a].off, *k);
                    for i in 0..len {
                        self.adj[a_off + i] += k * self.adj[off + i];
                    }
                }
                Op::AddScalar { a, .. } => {
                    let a_off = self.nodes[*a].off;
                    for i in 0..len {
                        self.adj[a_off + i] += self.adj[off + i];
                    }
                }
                Op::Exp { a } => {
                    let a_off = self.nodes[*a].off;
                    for i in 0..len {
                        self.adj[a_off + i] += self.adj[off + i] * self.vals[off + i];
                    }
                }
                Op::Square { a } => {
                    let a_off = self.nodes[*a].off;
                    for i in 0..len {
                        self.adj[a_off + i] += 2.0 * self.vals[a_off + i] * self.adj[off + i];
                    }
                }
                Op::SumAll { a } => {
                    let a_off = self.nodes[*a].off;
                    let a_len = self.nodes[*a].rows * self.nodes[*a].cols;
                    let g = self.adj[off];
                    if g != 0.0 {
                        for i in 0..a_len {
                            self.adj[a_off + i] += g;
                        }
                    }
                }
                Op::SegSum { a, seg } => {
                    let (a_off, seg) = (self.nodes[*a].off, *seg);
                    for s in 0..rows {
                        for c in 0..cols {
                            let g = self.adj[off + s * cols + c];
                            if g != 0.0 {
                                for i in 0..seg {
                                    self.adj[a_off + (s * seg + i) * cols + c] += g;
                                }
                            }
                        }
                    }
                }
                Op::SegCumprodExcl { a, seg } => {
                    // d x_j += y_j * B_j with the no-division suffix recurrence
                    // B_j = dy_{j+1} + x_{j+1} B_{j+1}.
                    let (a_off, seg) = (self.nodes[*a].off, *seg);
                    for s in 0..rows / seg {
                        let base = s * seg;
                        let mut b = 0.0;
                        for j in (0..seg).rev() {
                            if j + 1 < seg {
                                b = self.adj[off + base + j + 1]
                                    + self.vals[a_off + base + j + 1] * b;
                            } else {
                                b = 0.0;
                            }
                            self.adj[a_off + base + j] += self.vals[off + base + j] * b;
                        }
                    }
                }
                Op::SliceCols { a, start, len: slen } => {
                    let (a_off, start, slen) = (self.nodes[*a].off, *start, *slen);
                    let a_cols = self.nodes[*a].cols;
                    for i in 0..rows {
                        for c in 0..slen {
                            self.adj[a_off + i * a_cols + start + c] += self.adj[off + i * slen + c];
                        }
                    }
                }
                Op::AssembleRows { const_cols, emb, indices, .. } => {
                    let (const_cols, emb) = (*const_cols, *emb);
                    let e_off = self.nodes[emb].off;
                    let emb_dim = self.nodes[emb].cols;
                    if emb_dim > 0 {
                        let indices = indices.clone();
                        for (i, &ei) in indices.iter().enumerate() {
                            for c in 0..emb_dim {
                                self.adj[e_off + ei as usize * emb_dim + c] +=
                                    self.adj[off + i * cols + const_cols + c];
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Parameter-block gradient with the block's shape metadata, valid after
    /// `backward`.
    pub fn grad_param(&self, p: ParamId) -> ParamVector {
        let entry = &self.params[p.0];
        ParamVector::new(entry.grad.clone(), entry.pv.shapes().to_vec())
            .expect("gradient inherits validated shapes")
    }

    /// Adjoint of a leaf node, valid after `backward`.
    pub fn grad_of(&self, v: Var) -> &[f64] {
        let n = &self.nodes[v.0];
        &self.adj[n.off..n.off + n.rows * n.cols]
    }
}
