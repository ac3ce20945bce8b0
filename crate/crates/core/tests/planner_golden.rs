mod common;

use common::{golden_excess, TABLE1};
use fecpart::analysis::{plr_fec, plr_fec_part};
use fecpart::planner::{
    configuration_table, distribute_excess, excess_grid, plan, PlanRequest, DEFAULT_DELTA,
    EXCESS_BLOCK_LENGTHS, EXCESS_ERASURE_PROBS, EXCESS_PARITY,
};
use fecpart::{BecChannel, CodeSpec, Execution};

fn ch(p: f64) -> BecChannel {
    BecChannel::new(p).unwrap()
}

#[test]
fn configuration_table_matches_reference() {
    let table = configuration_table(1e-5, Execution::default()).unwrap();
    assert_eq!(table, TABLE1.map(|r| r.to_vec()).to_vec());
}

#[test]
fn plan_examples() {
    for (k, pe, n) in [
        (40, 0.05, 50),
        (80, 0.07, 98),
        (40, 0.09, 55),
        (40, 0.01, 44),
    ] {
        let r = plan(&PlanRequest::new(k, ch(pe))).unwrap();
        assert_eq!(r.spec.n(), n, "k={k} pe={pe}");
        assert!(r.plr <= 1e-5);
        assert_eq!(r.ri, (n - k) as f64 / k as f64);
    }
}

#[test]
fn partitioned_plan_respects_delta() {
    for (k, pe) in [(40, 0.01), (40, 0.1), (80, 0.05), (17, 0.2)] {
        let mut req = PlanRequest::new(k, ch(pe));
        req.partition = true;
        let r = plan(&req).unwrap();
        let pp = r.partition.unwrap();
        assert_eq!(pp.spec.parent(), r.spec);
        assert!(pp.plr - r.plr <= DEFAULT_DELTA);
        assert_eq!(pp.plr, plr_fec_part(pp.spec, ch(pe)).plr);
    }
}

#[test]
fn excess_is_minimal() {
    for (k, pe) in [(20, 0.05), (30, 0.05), (15, 0.1), (60, 0.05)] {
        let parent = CodeSpec::with_parity(k, EXCESS_PARITY).unwrap();
        let ps = distribute_excess(parent, ch(pe), DEFAULT_DELTA).unwrap();
        assert!(ps.excess() > 0);
        let plain = plr_fec(parent, ch(pe)).plr;
        let fewer = fecpart::PartitionSpec::split(parent, ps.excess() - 1).unwrap();
        assert!(plr_fec_part(fewer, ch(pe)).plr - plain > DEFAULT_DELTA);
    }
}

#[test]
fn excess_grid_matches_golden_runs() {
    let cells = excess_grid(
        &EXCESS_ERASURE_PROBS,
        EXCESS_BLOCK_LENGTHS,
        EXCESS_PARITY,
        DEFAULT_DELTA,
        Execution::default(),
    )
    .unwrap();
    assert_eq!(cells.len(), 303);
    for c in &cells {
        assert_eq!(c.excess, golden_excess(c.pe, c.k), "pe={} k={}", c.pe, c.k);
    }
    let zero = cells.iter().filter(|c| c.excess == 0).count();
    assert_eq!(zero, 181);
}

#[test]
fn excess_grid_is_execution_independent() {
    let run = |exec| excess_grid(&[0.05], 10..=40, EXCESS_PARITY, DEFAULT_DELTA, exec).unwrap();
    assert_eq!(run(Execution::Sequential), run(Execution::default()));
}
