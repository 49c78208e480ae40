use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::pyramid::PyramidLayer;
use crate::scalar::Scalar;
use crate::shots::ShotPlan;

use super::network::{DenseLayer, Exec, Layer, LayerSpec, Loss, Network};

impl std::fmt::Display for Exec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exec::Exact => f.write_str("exact"),
            Exec::Shots(p) => write!(
                f,
                "shots:{}:{}:{}:{}",
                p.n_shots,
                p.rng_seed,
                p.noise.map_or(0.0, |n| n.p_flip()),
                u8::from(p.mitigation)
            ),
        }
    }
}

impl std::str::FromStr for Exec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "exact" {
            return Ok(Exec::Exact);
        }
        let bad = || Error::Invalid(format!("execution mode '{s}' is not 'exact' or 'shots:<n>:<seed>:<p_flip>:<0|1>'"));
        let f: Vec<&str> = s.split(':').collect();
        if f.len() != 5 || f[0] != "shots" {
            return Err(bad());
        }
        let n: u64 = f[1].parse().map_err(|_| bad())?;
        let seed: u64 = f[2].parse().map_err(|_| bad())?;
        let p: f64 = f[3].parse().map_err(|_| bad())?;
        let mitigation = match f[4] {
            "0" => false,
            "1" => true,
            _ => return Err(bad()),
        };
        Ok(Exec::Shots(ShotPlan::new(n, seed)?.with_noise(p)?.with_mitigation(mitigation)))
    }
}

fn join<T: Scalar>(values: impl Iterator<Item = T>) -> String {
    values.map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(" ")
}

impl<T: Scalar> Network<T> {
    /// Text form: `NET <n_layers>`, `LOSS <name>`, then per layer a
    /// `PYRAMID` or `DENSE` block followed by `ACT <name>`.
    pub fn to_text(&self) -> String {
        let mut s = format!("NET {}\nLOSS {}\n", self.layers().len(), self.loss);
        for spec in self.layers() {
            match &spec.layer {
                Layer::Pyramid(p) => s.push_str(&p.to_text()),
                Layer::Dense(d) => {
                    let _ = writeln!(s, "DENSE {} {} {}", d.n_in(), d.n_out(), d.exec);
                    for r in 0..d.n_out() {
                        let _ = writeln!(s, "{}", join(d.weights.row(r).iter().copied()));
                    }
                    let _ = writeln!(s, "{}", join(d.bias.iter().copied()));
                }
            }
            let _ = writeln!(s, "ACT {}", spec.activation);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        let mut next = |what: &str| lines.next().ok_or_else(|| Error::Parse { line: 0, msg: format!("unexpected end of file, expected {what}") });
        let (ln, header) = next("NET header")?;
        let n_layers: usize = header
            .strip_prefix("NET ")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::Parse { line: ln, msg: format!("expected 'NET <n_layers>', found '{header}'") })?;
        let (ln, loss_line) = next("LOSS line")?;
        let loss: Loss = loss_line
            .strip_prefix("LOSS ")
            .ok_or_else(|| Error::Parse { line: ln, msg: format!("expected 'LOSS <name>', found '{loss_line}'") })?
            .trim()
            .parse()
            .map_err(|e: Error| Error::Parse { line: ln, msg: e.to_string() })?;
        let mut layers = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            let (ln, head) = next("layer header")?;
            let layer = if head.starts_with("PYRAMID") {
                let (_, angles) = next("pyramid angles")?;
                Layer::Pyramid(PyramidLayer::from_text_lines(head, angles, ln)?)
            } else if let Some(rest) = head.strip_prefix("DENSE ") {
                let f: Vec<&str> = rest.split_whitespace().collect();
                let bad = |msg: String| Error::Parse { line: ln, msg };
                if f.len() != 3 {
                    return Err(bad(format!("expected 'DENSE <n_in> <n_out> <exec>', found '{head}'")));
                }
                let n_in: usize = f[0].parse().map_err(|_| bad(format!("bad n_in '{}'", f[0])))?;
                let n_out: usize = f[1].parse().map_err(|_| bad(format!("bad n_out '{}'", f[1])))?;
                let exec: Exec = f[2].parse().map_err(|e: Error| bad(e.to_string()))?;
                let mut row_values = |count: usize, what: &str| -> Result<Vec<T>> {
                    let (ln, line) = next(what)?;
                    let v = line
                        .split_whitespace()
                        .map(|a| a.parse::<T>().map_err(|_| Error::Parse { line: ln, msg: format!("bad number '{a}'") }))
                        .collect::<Result<Vec<T>>>()?;
                    if v.len() != count {
                        return Err(Error::Parse { line: ln, msg: format!("expected {count} values, found {}", v.len()) });
                    }
                    Ok(v)
                };
                let mut w = Vec::with_capacity(n_in * n_out);
                for _ in 0..n_out {
                    w.extend(row_values(n_in, "weight row")?);
                }
                let b = row_values(n_out, "bias row")?;
                let d = DenseLayer::new(DMatrix::from_row_slice(n_out, n_in, &w), DVector::from_vec(b), exec)
                    .map_err(|e| bad(e.to_string()))?;
                Layer::Dense(d)
            } else {
                return Err(Error::Parse { line: ln, msg: format!("expected PYRAMID or DENSE, found '{head}'") });
            };
            let (ln, act) = next("ACT line")?;
            let activation = act
                .strip_prefix("ACT ")
                .ok_or_else(|| Error::Parse { line: ln, msg: format!("expected 'ACT <name>', found '{act}'") })?
                .trim()
                .parse()
                .map_err(|e: Error| Error::Parse { line: ln, msg: e.to_string() })?;
            layers.push(LayerSpec { layer, activation });
        }
        if let Some((ln, extra)) = lines.next() {
            return Err(Error::Parse { line: ln, msg: format!("unexpected trailing content '{extra}'") });
        }
        Network::new(layers, loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::Activation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_mixed_network() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = PyramidLayer::<f64>::random(5, 3, &mut rng).unwrap();
        let mut d = Network::<f64>::dense(&[3, 4, 2], Activation::Relu, &mut rng).unwrap();
        d.set_exec(Exec::Shots(ShotPlan::new(1000, 9).unwrap().with_noise(0.01).unwrap().with_mitigation(true)));
        let mut layers = vec![LayerSpec { layer: Layer::Pyramid(p), activation: Activation::Sigmoid }];
        layers.extend(d.layers().iter().cloned());
        let net = Network::new(layers, Loss::Mse).unwrap();
        let text = net.to_text();
        assert!(text.starts_with("NET 3\nLOSS mse\nPYRAMID 5 3 0\n"));
        assert!(text.contains("DENSE 3 4 shots:1000:9:0.01:1\n"));
        assert_eq!(Network::<f64>::from_text(&text).unwrap(), net);
    }

    #[test]
    fn parse_errors_carry_lines() {
        let e = Network::<f64>::from_text("NET 1\nLOSS bce\nDENSE 2 1 exact\n1 2\n0\nACT swish\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 6, .. }), "{e:?}");
        let e = Network::<f64>::from_text("NET 1\nLOSS bce\nDENSE 2 1 exact\n1\n0\nACT none\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 4, .. }));
        assert!(Network::<f64>::from_text("NET 2\nLOSS bce\nDENSE 2 1 exact\n1 2\n0\nACT none\n").is_err());
        assert!("shots:0:1:0:0".parse::<Exec>().is_err());
    }
}
