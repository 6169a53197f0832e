use super::PlantError;

/// Running tracking cost `J` and the number of increments folded into it.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CostAccumulator {
    pub j: f64,
    pub samples: u64,
}

/// `J <- J + dJ`; increments must be non-negative.
pub fn accumulate(acc: CostAccumulator, delta: f64) -> Result<CostAccumulator, PlantError> {
    if delta < 0.0 || delta.is_nan() {
        return Err(PlantError::NegativeIncrement(delta));
    }
    Ok(CostAccumulator {
        j: acc.j + delta,
        samples: acc.samples + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adds_increments() {
        let acc = accumulate(CostAccumulator::default(), 1.5).unwrap();
        assert_eq!((acc.j, acc.samples), (1.5, 1));
        let acc = accumulate(acc, 0.0).unwrap();
        assert_eq!((acc.j, acc.samples), (1.5, 2));
    }

    #[test]
    fn rejects_negative() {
        assert_eq!(
            accumulate(CostAccumulator::default(), -0.1),
            Err(PlantError::NegativeIncrement(-0.1))
        );
    }

    #[test]
    fn fold_order_within_an_ulp() {
        let (a, b, c) = (0.1, 0.7, 1e-3);
        let fold = |xs: [f64; 3]| {
            xs.iter()
                .try_fold(CostAccumulator::default(), |acc, &x| accumulate(acc, x))
                .unwrap()
                .j
        };
        let x = fold([a, b, c]);
        let y = fold([c, b, a]);
        assert!((x - y).abs() <= f64::EPSILON * x);
        assert!((x - (a + b + c)).abs() <= f64::EPSILON * x);
    }
}
