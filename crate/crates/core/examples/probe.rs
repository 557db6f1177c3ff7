use skyprobe::*;
use skyprobe::pq::*;
use rand::Rng; use rand::SeedableRng; use rand_chacha::ChaCha8Rng;

fn schema2(xdom: u32, ydom: u32) -> Vec<AttributeSchema> {
    vec![AttributeSchema::ranking("x", xdom, InterfaceClass::Pq),
         AttributeSchema::ranking("y", ydom, InterfaceClass::Pq)]
}
// every x value and every y value occupied by at least one tuple
fn occupied_2d(seed: u64, xdom: u32, ydom: u32, extra: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut combos = std::collections::HashSet::new();
    let mut tuples: Vec<Tuple> = Vec::new();
    let mut ys: Vec<u32> = (0..ydom).collect();
    for v in 0..xdom {
        // random y for each column
        let y = rng.random_range(0..ydom);
        if combos.insert(vec![v, y]) { tuples.push(Tuple::new(tuples.len() as u64, vec![v, y])); }
    }
    for y in ys.drain(..) {
        if !tuples.iter().any(|t| t.values[1] == y) {
            let x = rng.random_range(0..xdom);
            if combos.insert(vec![x, y]) { tuples.push(Tuple::new(tuples.len() as u64, vec![x, y])); }
        }
    }
    for _ in 0..extra {
        let v = vec![rng.random_range(0..xdom), rng.random_range(0..ydom)];
        if combos.insert(v.clone()) { tuples.push(Tuple::new(tuples.len() as u64, v)); }
    }
    Dataset::new(schema2(xdom, ydom), tuples).unwrap()
}
fn main() {
    let mut mism = 0; let mut tested = 0; let mut bound_viol = 0;
    for seed in 0..2000u64 {
        let xdom = 4 + (seed % 40) as u32;
        let ydom = 4 + ((seed / 7) % 40) as u32;
        let d = occupied_2d(seed, xdom, ydom, (seed % 30) as usize);
        let sky = oracle_skyline(&d);
        let mut pts: Vec<(u32,u32)> = sky.members().iter().map(|&id| { let t = d.tuple(id).unwrap(); (t.values[0], t.values[1]) }).collect();
        pts.sort_unstable();
        tested += 1;
        let expected = pq2d_cost_formula(&pts, xdom-1, ydom-1).unwrap();
        for pick in [PlanePick::FirstAgreeing, PlanePick::LastAgreeing] {
            let mut s = DiscoverySession::new(d.clone(), 1, RankingMode::uniform_weights(2), None).unwrap();
            let (_, stats) = pq2d_discover_with(&mut s, pick).unwrap();
            if stats.one_d_queries != expected {
                mism += 1;
                if mism <= 3 { println!("MISMATCH seed={seed} {xdom}x{ydom} got {} expected {} sky {:?}", stats.one_d_queries, expected, pts); }
            }
        }
        // three upper bounds
        let c = expected;
        let t1y = pts[0].1 as u64; let tsx = pts[pts.len()-1].0 as u64;
        let minsum = pts.iter().map(|&(x,y)| (x+y) as u64).min().unwrap();
        if c > t1y || c > tsx || c > minsum { bound_viol += 1; }
    }
    println!("occupied tested {tested}, mismatches {mism}, bound violations {bound_viol}");
}
