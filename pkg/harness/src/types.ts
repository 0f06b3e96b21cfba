/** Wire formats shared with the planner. */

export interface GraphLayer {
  id: number;
  name: string;
  kind: string;
  output_bytes: number;
}

export interface GraphDoc {
  model_name: string;
  reference_input_bytes: number;
  layers: GraphLayer[];
  edges: Array<[number, number]>;
}

export interface ProfileUnit {
  unit_id: number;
  mean_s: number;
  samples_s: number[];
  /** raw serialized size of the tensor this unit emits; extra field, the
   *  planner ignores it */
  output_bytes: number;
}

export interface ProfileDoc {
  resource_id: string;
  tier: string;
  model_name: string;
  runs: number;
  units: ProfileUnit[];
}

export interface UnitSpec {
  unitId: number;
  memberIds: number[];
  boundaryBytes: number;
}
