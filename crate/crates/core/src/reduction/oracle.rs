//! The expected greedy action `g(theta) = E[argmax_{a in A} <a, theta>]`.

use std::io::Write;
use std::sync::Arc;

use super::ReductionError;
use crate::environments::{ActionSet, Context, ContextDistribution, ProductDistribution};
use crate::geometry::ParameterNet;
use crate::Vector;

/// Exact `g(theta)` for a finite-support distribution.
pub fn exact_g(dist: &ContextDistribution, theta: &Vector) -> Result<Vector, ReductionError> {
    let finite = dist.as_finite().ok_or(ReductionError::NotFiniteSupport)?;
    let mut g = Vector::zeros(finite.dim());
    for (set, p) in finite.supports().iter().zip(finite.probabilities()) {
        g.axpy(*p, &set.actions()[set.argmax(theta)], 1.0);
    }
    Ok(g)
}

fn product_g(dist: &ProductDistribution, theta: &Vector) -> Vector {
    Vector::from_iterator(
        dist.dim(),
        dist.coordinates().iter().enumerate().map(|(i, law)| {
            if theta[i] < 0.0 {
                law.expected_min()
            } else {
                law.expected_max()
            }
        }),
    )
}

/// Exact `g(theta)` for a product distribution, computed coordinatewise.
pub fn exact_g_product(dist: &ContextDistribution, theta: &Vector) -> Result<Vector, ReductionError> {
    let product = dist.as_product().ok_or(ReductionError::NotProduct)?;
    Ok(product_g(product, theta))
}

/// Exact `g` for either kind of distribution.
pub fn exact_g_any(dist: &ContextDistribution, theta: &Vector) -> Vector {
    match dist {
        ContextDistribution::Finite(_) => exact_g(dist, theta).expect("finite"),
        ContextDistribution::Product(p) => product_g(p, theta),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GMode {
    Exact,
    Empirical,
}

/// Per-support argmax indices for every net point, cached per action set.
#[derive(Debug, Clone, Default)]
struct ArgmaxCache {
    entries: Vec<Option<(Arc<ActionSet>, Vec<u32>)>>,
}

impl ArgmaxCache {
    fn lookup(&mut self, support: usize, set: &Arc<ActionSet>, net: &ParameterNet) -> &[u32] {
        if self.entries.len() <= support {
            self.entries.resize(support + 1, None);
        }
        let fresh = match &self.entries[support] {
            Some((cached, _)) => !Arc::ptr_eq(cached, set),
            None => true,
        };
        if fresh {
            let idx = net.points().iter().map(|p| set.argmax(p) as u32).collect();
            self.entries[support] = Some((Arc::clone(set), idx));
        }
        &self.entries[support].as_ref().expect("filled above").1
    }
}

/// Estimates of `g` at every net point.
#[derive(Debug, Clone)]
pub struct GTable {
    net: Arc<ParameterNet>,
    mode: GMode,
    dim: usize,
    // row-major |net| x dim; exact mode stores the vectors, empirical the sums
    data: Vec<f64>,
    count: u64,
    cache: ArgmaxCache,
}

impl GTable {
    /// Empirical table with every estimate initialised to zero.
    pub fn empirical(net: Arc<ParameterNet>) -> Self {
        let dim = net.dim();
        Self {
            data: vec![0.0; net.len() * dim],
            net,
            mode: GMode::Empirical,
            dim,
            count: 0,
            cache: ArgmaxCache::default(),
        }
    }

    pub fn exact(net: Arc<ParameterNet>, dist: &ContextDistribution) -> Self {
        let dim = net.dim();
        let mut data = Vec::with_capacity(net.len() * dim);
        for p in net.points() {
            data.extend(exact_g_any(dist, p).iter());
        }
        Self {
            data,
            net,
            mode: GMode::Exact,
            dim,
            count: 0,
            cache: ArgmaxCache::default(),
        }
    }

    pub fn net(&self) -> &Arc<ParameterNet> {
        &self.net
    }

    pub fn mode(&self) -> GMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.net.len()
    }

    pub fn is_empty(&self) -> bool {
        self.net.is_empty()
    }

    /// Number of contexts averaged (zero in exact mode).
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn vector(&self, index: usize) -> Vector {
        let row = &self.data[index * self.dim..(index + 1) * self.dim];
        match self.mode {
            GMode::Exact => Vector::from_row_slice(row),
            GMode::Empirical if self.count == 0 => Vector::zeros(self.dim),
            GMode::Empirical => Vector::from_row_slice(row) / self.count as f64,
        }
    }

    pub fn vectors(&self) -> Vec<Vector> {
        (0..self.len()).map(|i| self.vector(i)).collect()
    }

    /// Adds one context to every running mean. No-op in exact mode.
    pub fn update(&mut self, context: &Context) {
        if self.mode == GMode::Exact {
            return;
        }
        let dim = self.dim;
        match context {
            Context::Finite { support, set } => {
                let idx = self.cache.lookup(*support, set, &self.net);
                for (row, &k) in self.data.chunks_exact_mut(dim).zip(idx) {
                    for (x, a) in row.iter_mut().zip(set.actions()[k as usize].iter()) {
                        *x += a;
                    }
                }
            }
            Context::Product { .. } => {
                for (row, p) in self.data.chunks_exact_mut(dim).zip(self.net.points()) {
                    let a = context.best_action(p);
                    for (x, v) in row.iter_mut().zip(a.iter()) {
                        *x += v;
                    }
                }
            }
        }
        self.count += 1;
    }

    /// Geometry point format with a trailing count column.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "dim={} kind=gtable radius={}",
            self.dim,
            self.net.target_radius()
        )?;
        for i in 0..self.len() {
            let v = self.vector(i);
            let mut fields: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            fields.push(self.count.to_string());
            writeln!(out, "{}", fields.join(" "))?;
        }
        Ok(())
    }
}

/// Streams one context into an empirical table.
pub fn empirical_g_update(table: &mut GTable, context: &Context) {
    table.update(context);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::example1;

    fn line_net(points: &[f64]) -> Arc<ParameterNet> {
        Arc::new(
            ParameterNet::from_points(
                points.iter().map(|&x| Vector::from_element(1, x)).collect(),
                0.1,
            )
            .unwrap(),
        )
    }

    #[test]
    fn example1_exact_values() {
        let (dist, _) = example1(1.0).unwrap();
        assert_eq!(exact_g(&dist, &Vector::from_element(1, 0.7)).unwrap()[0], 1.0);
        assert_eq!(exact_g(&dist, &Vector::from_element(1, -0.7)).unwrap()[0], 0.0);
        assert!(matches!(
            exact_g_product(&dist, &Vector::from_element(1, 1.0)),
            Err(ReductionError::NotProduct)
        ));
    }

    #[test]
    fn example1_empirical_after_both_contexts() {
        let (dist, _) = example1(1.0).unwrap();
        let f = dist.as_finite().unwrap();
        let mut table = GTable::empirical(line_net(&[0.5, -0.5]));
        assert_eq!(table.vector(0)[0], 0.0);
        table.update(&f.context(0));
        assert_eq!(table.vector(1)[0], -1.0);
        table.update(&f.context(1));
        assert_eq!(table.vector(0)[0], 1.0);
        assert_eq!(table.vector(1)[0], 0.0);
        assert_eq!(table.count(), 2);
    }

    #[test]
    fn product_exact_values() {
        let dist = ContextDistribution::product(vec![vec![
            (vec![-1.0, 0.0], 0.5),
            (vec![-1.0, 1.0], 0.5),
        ]])
        .unwrap();
        assert_eq!(exact_g_product(&dist, &Vector::from_element(1, 1.0)).unwrap()[0], 0.5);
        assert_eq!(exact_g_product(&dist, &Vector::from_element(1, -1.0)).unwrap()[0], -1.0);
        assert_eq!(exact_g_product(&dist, &Vector::from_element(1, 0.0)).unwrap()[0], 0.5);
        assert!(matches!(
            exact_g(&dist, &Vector::from_element(1, 1.0)),
            Err(ReductionError::NotFiniteSupport)
        ));

        let pm = vec![(vec![-1.0, 1.0], 1.0)];
        let dist = ContextDistribution::product(vec![pm.clone(), pm]).unwrap();
        let g = exact_g_product(&dist, &Vector::from_row_slice(&[0.6, -0.8])).unwrap();
        assert_eq!(g, Vector::from_row_slice(&[1.0, -1.0]));
    }

    #[test]
    fn gtable_serialises_with_count() {
        let (dist, _) = example1(1.0).unwrap();
        let mut table = GTable::empirical(line_net(&[1.0]));
        table.update(&dist.as_finite().unwrap().context(1));
        let mut buf = Vec::new();
        table.write(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "dim=1 kind=gtable radius=0.1\n1 1\n");
    }
}
