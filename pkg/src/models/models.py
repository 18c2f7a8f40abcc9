from datetime import datetime
from flask_sqlalchemy import SQLAlchemy

db = SQLAlchemy()

class ExperimentRecord(db.Model):
    __tablename__ = 'experiments'
    id = db.Column(db.Integer, primary_key=True)
    n = db.Column(db.Integer, nullable=False)  # N=M=L
    t = db.Column(db.Float, nullable=False)  # 误差对应的时刻
    eps = db.Column(db.Float, nullable=False)  # 粘性系数 ε
    scheme = db.Column(db.String(10), nullable=False)  # cfvm / nfvm
    vel_l2 = db.Column(db.Float)  # 速度 L² 误差，blowup 时为空
    p_l2 = db.Column(db.Float)  # 压力 L² 误差（去均值）
    p_l2_raw = db.Column(db.Float)  # 压力 L² 误差（未去均值）
    vel_rel = db.Column(db.Float)  # 速度相对误差
    p_rel = db.Column(db.Float)  # 压力相对误差
    dt = db.Column(db.Float, nullable=False)
    theta = db.Column(db.Float, nullable=False)  # 通量松弛系数
    alpha = db.Column(db.Float, nullable=False)  # 旋转速率
    status = db.Column(db.String(10), nullable=False, default='ok')  # ok / blowup
    wall_clock_s = db.Column(db.Float, nullable=False, default=0.0)  # 运行用时(秒)
    created_at = db.Column(db.DateTime, nullable=False, default=datetime.utcnow)

    def to_dict(self):
        return {
            'id': self.id,
            'N': self.n,
            't': self.t,
            'eps': self.eps,
            'scheme': self.scheme,
            'vel_l2': self.vel_l2,
            'p_l2': self.p_l2,
            'p_l2_raw': self.p_l2_raw,
            'vel_rel': self.vel_rel,
            'p_rel': self.p_rel,
            'dt': self.dt,
            'theta': self.theta,
            'alpha': self.alpha,
            'status': self.status,
            'wall_clock_s': self.wall_clock_s,
            'created_at': self.created_at.strftime('%Y-%m-%d %H:%M:%S')
        }

class ScalingRecord(db.Model):
    __tablename__ = 'scaling_studies'
    id = db.Column(db.Integer, primary_key=True)
    quantity = db.Column(db.String(40), nullable=False)  # dphi3_dt_L2 等
    slope = db.Column(db.Float, nullable=False)  # log-log 拟合斜率
    t = db.Column(db.Float, nullable=False, default=1.0)
    eps_list = db.Column(db.JSON, nullable=False)
    norms = db.Column(db.JSON, nullable=False)
    created_at = db.Column(db.DateTime, nullable=False, default=datetime.utcnow)

    def to_dict(self):
        return {
            'id': self.id,
            'quantity': self.quantity,
            'slope': self.slope,
            't': self.t,
            'eps_list': self.eps_list,
            'norms': self.norms,
            'created_at': self.created_at.strftime('%Y-%m-%d %H:%M:%S')
        }

class PublishedReference(db.Model):
    __tablename__ = 'published_references'
    id = db.Column(db.Integer, primary_key=True)
    quantity = db.Column(db.String(10), nullable=False)  # velocity / pressure
    n = db.Column(db.Integer, nullable=False)
    eps = db.Column(db.Float, nullable=False)
    scheme = db.Column(db.String(10), nullable=False)
    value = db.Column(db.Float, nullable=False)  # 已发表的 t=1 误差

    __table_args__ = (db.UniqueConstraint('quantity', 'n', 'eps', 'scheme'),)

    def to_dict(self):
        return {
            'quantity': self.quantity,
            'N': self.n,
            'eps': self.eps,
            'scheme': self.scheme,
            'value': self.value
        }
